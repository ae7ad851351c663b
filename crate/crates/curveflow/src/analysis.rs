//! Convergence theory checks: limit identification, decay rates, a priori
//! bounds, and distances between reconstructed curves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{reconstruct_curve, PlaneCurve, RadiusProfile};
use crate::solver::{FlowProblem, RunResult, StepDiagnostics, CLOSURE_TOLERANCE};

/// The constant `c₀` of the limiting parallel curve `ρ̃ + c₀`, found by
/// bisecting the strictly decreasing map `c ↦ ∮ dθ/(ρ̃ + c)` to the desired
/// elastic energy.
///
/// Converges until the bracket is at floating-point width and the residual is
/// at most `1e-12` (absolute, relative to the desired energy's scale).
pub fn limit_constant(target: &RadiusProfile, desired_energy: f64) -> Result<f64> {
    if !desired_energy.is_finite() || desired_energy <= 0.0 {
        return Err(Error::Invalid(format!(
            "desired energy must be positive and finite, got {desired_energy}"
        )));
    }
    let ws = target.grid().workspace();
    let d = ws.dtheta();
    let energy_at =
        |c: f64| -> f64 { target.values().iter().map(|v| 1.0 / (v + c)).sum::<f64>() * d };

    let min_val = target
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    // E → ∞ as c approaches −min ρ̃ from above, E → 0 as c → ∞.
    let mut lo = -min_val + 1e-13 * min_val.abs().max(1.0);
    if energy_at(lo) <= desired_energy {
        return Err(Error::Invalid(format!(
            "desired energy {desired_energy} is not reachable on this profile"
        )));
    }
    let mut hi = lo.abs().max(1.0);
    while energy_at(hi) > desired_energy {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Invalid(format!(
                "desired energy {desired_energy} is not reachable on this profile"
            )));
        }
    }

    let tol = 1e-12 * desired_energy.max(1.0);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let e = energy_at(mid);
        if e > desired_energy {
            lo = mid;
        } else {
            hi = mid;
        }
        let width_done = (hi - lo) <= f64::EPSILON * mid.abs().max(1.0);
        if width_done && (e - desired_energy).abs() <= tol {
            break;
        }
    }
    Ok(mid)
}

/// Least-squares line through `log sup|u_θ|` against `t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Time window the fit used.
    pub t_begin: f64,
    pub t_end: f64,
    /// Number of samples that entered the fit.
    pub samples: usize,
    /// True when window samples had to be dropped for sitting at or below the
    /// positivity floor of the logarithm.
    pub truncated: bool,
}

/// Fit the exponential decay rate of a positive signal over `[window.0, window.1]`.
pub fn decay_fit(times: &[f64], sups: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != sups.len() {
        return Err(Error::Invalid(
            "decay fit needs one sup value per time".into(),
        ));
    }
    if !window.0.is_finite() || !window.1.is_finite() || window.0 >= window.1 {
        return Err(Error::Invalid(format!(
            "decay window [{}, {}] is empty",
            window.0, window.1
        )));
    }
    const FLOOR: f64 = 1e-14;
    let mut truncated = false;
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &s) in times.iter().zip(sups) {
        if t < window.0 - 1e-12 || t > window.1 + 1e-12 {
            continue;
        }
        if s <= FLOOR {
            truncated = true;
            continue;
        }
        ts.push(t);
        logs.push(s.ln());
    }
    let n = ts.len();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "decay window [{}, {}] contains {n} usable samples; need at least 2",
            window.0, window.1
        )));
    }
    let nf = n as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let l_mean = logs.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var = 0.0;
    for i in 0..n {
        let dt = ts[i] - t_mean;
        cov += dt * (logs[i] - l_mean);
        var += dt * dt;
    }
    if var == 0.0 {
        return Err(Error::Invalid(
            "decay window collapses to a single time".into(),
        ));
    }
    let slope = cov / var;
    Ok(DecayFit {
        slope,
        intercept: l_mean - slope * t_mean,
        t_begin: window.0,
        t_end: window.1,
        samples: n,
        truncated,
    })
}

/// The a priori pointwise bound `sup ρ(t) / inf ρ(t') ≤ e^{M₁ E}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarnackBound {
    /// `M₁ = sup |ρ̃_θ| + sup |u_θ(0)|`.
    pub m1: f64,
    /// `e^{M₁ E}` for the conserved energy of the run.
    pub bound: f64,
}

/// Evaluate the Harnack constant from the problem's initial data.
pub fn theoretical_harnack_bound(problem: &FlowProblem) -> Result<HarnackBound> {
    let ws = problem.grid().workspace();
    let target_theta = ws.derivative(problem.target_radius().values(), 1);
    let u0: Vec<f64> = problem
        .initial()
        .values()
        .iter()
        .zip(problem.target_radius().values())
        .map(|(a, b)| a - b)
        .collect();
    let u0_theta = ws.derivative(&u0, 1);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let m1 = sup(&target_theta) + sup(&u0_theta);
    let inv: Vec<f64> = problem
        .initial()
        .values()
        .iter()
        .map(|&r| 1.0 / r)
        .collect();
    let energy = ws.quadrature(&inv);
    Ok(HarnackBound {
        m1,
        bound: (m1 * energy).exp(),
    })
}

/// Sup-norm distance between two curves after the optimal translation.
///
/// Equals the radius of the smallest circle enclosing the pointwise
/// difference set, computed exactly.
pub fn curve_distance_mod_translation(a: &PlaneCurve, b: &PlaneCurve) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::Invalid("curves live on different grids".into()));
    }
    let diffs: Vec<(f64, f64)> = (0..a.grid().n())
        .map(|i| (a.x()[i] - b.x()[i], a.y()[i] - b.y()[i]))
        .collect();
    Ok(enclosing_circle(&diffs).2)
}

/// Smallest enclosing circle `(cx, cy, r)` of a point set (Welzl's
/// algorithm, deterministic order).
fn enclosing_circle(points: &[(f64, f64)]) -> (f64, f64, f64) {
    fn covers(c: (f64, f64, f64), p: (f64, f64)) -> bool {
        let dx = p.0 - c.0;
        let dy = p.1 - c.1;
        dx * dx + dy * dy <= c.2 * c.2 * (1.0 + 1e-12) + 1e-24
    }

    fn from_two(a: (f64, f64), b: (f64, f64)) -> (f64, f64, f64) {
        let cx = 0.5 * (a.0 + b.0);
        let cy = 0.5 * (a.1 + b.1);
        (cx, cy, ((a.0 - cx).powi(2) + (a.1 - cy).powi(2)).sqrt())
    }

    fn from_three(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64, f64) {
        let (bx, by) = (b.0 - a.0, b.1 - a.1);
        let (cx, cy) = (c.0 - a.0, c.1 - a.1);
        let det = 2.0 * (bx * cy - by * cx);
        if det.abs() < 1e-30 {
            // Collinear: the widest pair's diameter circle covers all three.
            let candidates = [from_two(a, b), from_two(a, c), from_two(b, c)];
            return candidates
                .into_iter()
                .filter(|&circ| covers(circ, a) && covers(circ, b) && covers(circ, c))
                .min_by(|p, q| p.2.total_cmp(&q.2))
                .expect("one pair spans collinear points");
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / det;
        let uy = (bx * c2 - cx * b2) / det;
        (a.0 + ux, a.1 + uy, (ux * ux + uy * uy).sqrt())
    }

    fn trivial(boundary: &[(f64, f64)]) -> (f64, f64, f64) {
        match boundary {
            [] => (0.0, 0.0, 0.0),
            [a] => (a.0, a.1, 0.0),
            [a, b] => from_two(*a, *b),
            [a, b, c] => from_three(*a, *b, *c),
            _ => unreachable!("boundary never exceeds three points"),
        }
    }

    fn welzl(points: &[(f64, f64)], boundary: &mut Vec<(f64, f64)>) -> (f64, f64, f64) {
        if points.is_empty() || boundary.len() == 3 {
            return trivial(boundary);
        }
        let p = points[0];
        let circle = welzl(&points[1..], boundary);
        if covers(circle, p) {
            return circle;
        }
        boundary.push(p);
        let circle = welzl(&points[1..], boundary);
        boundary.pop();
        circle
    }

    welzl(points, &mut Vec::new())
}

/// Outcome of checking one a priori bound along a run.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    /// Diagnostic rows that violated the bound.
    pub violations: usize,
    /// Smallest slack encountered; negative exactly when violations exist.
    pub worst_margin: f64,
}

/// Check every a priori bound of the flow against recorded diagnostics.
///
/// The bounds: positivity of `ρ`; the closure defect staying below
/// [`CLOSURE_TOLERANCE`]; the Harnack comparison `sup ρ / inf ρ ≤ e^{M₁E}`
/// across all times; the energy sandwich `ρ_min E ≤ 2πm ≤ ρ_max E`; and the
/// decay `sup|u_θ(t)| ≤ sup|u_θ(0)| e^{−(1+1/m²)t}` at the slowest admissible
/// rate.
pub fn sweep_bounds(
    problem: &FlowProblem,
    diagnostics: &[StepDiagnostics],
) -> Result<Vec<BoundCheck>> {
    if diagnostics.is_empty() {
        return Err(Error::Invalid(
            "bound sweep needs at least one diagnostic row".into(),
        ));
    }
    let harnack = theoretical_harnack_bound(problem)?;
    let period = problem.grid().period();
    let m = problem.grid().m() as f64;
    let decay_rate = 1.0 + 1.0 / (m * m);
    let sup_u_theta_0 = diagnostics[0].sup_u_theta;

    let mut positivity = BoundCheck {
        name: "positivity".into(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    let mut closure = BoundCheck {
        name: "closure".into(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    let mut harnack_check = BoundCheck {
        name: "harnack".into(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    let mut sandwich = BoundCheck {
        name: "energy_sandwich".into(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    let mut decay = BoundCheck {
        name: "derivative_decay".into(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };

    let mut running_max: f64 = 0.0;
    let mut running_min = f64::INFINITY;
    for row in diagnostics {
        let tally = |check: &mut BoundCheck, margin: f64| {
            check.worst_margin = check.worst_margin.min(margin);
            if margin < 0.0 {
                check.violations += 1;
            }
        };

        tally(&mut positivity, row.rho_min);
        tally(&mut closure, CLOSURE_TOLERANCE - row.closure_defect);

        running_max = running_max.max(row.rho_max);
        running_min = running_min.min(row.rho_min);
        tally(
            &mut harnack_check,
            harnack.bound - running_max / running_min,
        );

        let sandwich_margin =
            (period - row.rho_min * row.energy).min(row.rho_max * row.energy - period);
        tally(&mut sandwich, sandwich_margin);

        // Small relative headroom so the bound is not tripped by roundoff on
        // data that saturates it exactly.
        let allowed = sup_u_theta_0 * (-decay_rate * row.t).exp() * (1.0 + 1e-6) + 1e-12;
        tally(&mut decay, allowed - row.sup_u_theta);
    }

    Ok(vec![positivity, closure, harnack_check, sandwich, decay])
}

/// Harnack data as it appears in a report: theory next to observation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarnackReport {
    pub m1: f64,
    pub bound: f64,
    /// Largest `sup ρ / inf ρ` over all pairs of recorded times.
    pub observed_max_ratio: f64,
}

/// Full convergence analysis of one completed run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Constant of the limiting parallel curve, from energy conservation.
    pub limit_constant: f64,
    /// Mean of `ρ(T) − ρ̃`: what the run actually converged to. Agrees with
    /// `limit_constant` once the oscillating part has decayed.
    pub limit_constant_observed: f64,
    pub final_time: f64,
    pub final_f: f64,
    /// `sup |ρ(T) − (ρ̃ + c₀)|`.
    pub final_sup_u: f64,
    pub final_sup_u_theta: f64,
    /// Distance (mod translation) between the final curve and the limit.
    pub final_curve_distance: f64,
    /// Relative energy drift `|E(T) − E(0)|/E(0)` over the run.
    pub energy_drift: f64,
    pub decay: DecayFit,
    pub harnack: HarnackReport,
    pub bounds: Vec<BoundCheck>,
}

/// Assemble the report for a finished run.
///
/// `decay_window` defaults to the last three quarters of the run, which
/// skips the initial transient where fast harmonics still dominate the rate.
pub fn build_report(
    problem: &FlowProblem,
    result: &RunResult,
    decay_window: Option<(f64, f64)>,
) -> Result<ConvergenceReport> {
    let diags = &result.diagnostics;
    if diags.len() < 2 {
        return Err(Error::Invalid(
            "report needs a run with at least one step".into(),
        ));
    }
    let energy0 = diags[0].energy;
    let t_final = diags.last().expect("nonempty").t;
    let c0 = limit_constant(problem.target_radius(), energy0)?;

    let limit_values: Vec<f64> = problem
        .target_radius()
        .values()
        .iter()
        .map(|v| v + c0)
        .collect();
    let limit_profile = RadiusProfile::from_values(problem.grid(), limit_values)?;
    let final_rho = &result.final_state.rho;
    let final_sup_u = final_rho
        .values()
        .iter()
        .zip(limit_profile.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let final_curve_distance = curve_distance_mod_translation(
        &reconstruct_curve(final_rho),
        &reconstruct_curve(&limit_profile),
    )?;

    let window = decay_window.unwrap_or((t_final / 4.0, t_final));
    let times: Vec<f64> = diags.iter().map(|d| d.t).collect();
    let sups: Vec<f64> = diags.iter().map(|d| d.sup_u_theta).collect();
    let decay = decay_fit(&times, &sups, window)?;

    let harnack = theoretical_harnack_bound(problem)?;
    let observed_max_ratio = {
        let max = diags
            .iter()
            .map(|d| d.rho_max)
            .fold(f64::NEG_INFINITY, f64::max);
        let min = diags
            .iter()
            .map(|d| d.rho_min)
            .fold(f64::INFINITY, f64::min);
        max / min
    };
    let bounds = sweep_bounds(problem, diags)?;
    let last = diags.last().expect("nonempty");
    let n = final_rho.values().len() as f64;
    let limit_constant_observed = final_rho
        .values()
        .iter()
        .zip(problem.target_radius().values())
        .map(|(a, b)| a - b)
        .sum::<f64>()
        / n;

    Ok(ConvergenceReport {
        limit_constant: c0,
        limit_constant_observed,
        final_time: t_final,
        final_f: last.f_value,
        final_sup_u,
        final_sup_u_theta: last.sup_u_theta,
        final_curve_distance,
        energy_drift: (last.energy - energy0).abs() / energy0.abs(),
        decay,
        harnack: HarnackReport {
            m1: harnack.m1,
            bound: harnack.bound,
            observed_max_ratio,
        },
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlaneCurve, TangentAngleGrid};
    use crate::solver::{run, SolverConfig};
    use crate::test_fixtures::threefold_problem;

    #[test]
    fn limit_constant_on_a_circle_family_is_exact() {
        // ρ̃ ≡ 2 on winding 1: E(c) = 2π/(2 + c), so E = 2π/2.5 pins c₀ = 0.5.
        let g = TangentAngleGrid::new(64, 1).unwrap();
        let rho = RadiusProfile::from_values(g, vec![2.0; 64]).unwrap();
        let desired = 2.0 * std::f64::consts::PI / 2.5;
        let c0 = limit_constant(&rho, desired).unwrap();
        assert!((c0 - 0.5).abs() < 1e-12, "c0 = {c0:.15}");
    }

    #[test]
    fn limit_constant_identifies_the_threefold_shift() {
        let problem = threefold_problem(512);
        let ws = problem.grid().workspace();
        let shifted: Vec<f64> = problem
            .target_radius()
            .values()
            .iter()
            .map(|v| 1.0 / (v + 0.5))
            .collect();
        let desired = ws.quadrature(&shifted);
        let c0 = limit_constant(problem.target_radius(), desired).unwrap();
        assert!((c0 - 0.5).abs() < 1e-10, "c0 = {c0:.15}");
    }

    #[test]
    fn limit_constant_rejects_unreachable_energies() {
        let g = TangentAngleGrid::new(64, 1).unwrap();
        let rho = RadiusProfile::from_values(g, vec![2.0; 64]).unwrap();
        assert!(limit_constant(&rho, 0.0).is_err());
        assert!(limit_constant(&rho, 1e20).is_err());
    }

    #[test]
    fn decay_fit_recovers_a_pure_exponential() {
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let sups: Vec<f64> = times.iter().map(|t| (0.2 - 1.3 * t).exp()).collect();
        let fit = decay_fit(&times, &sups, (1.0, 9.0)).unwrap();
        assert!((fit.slope + 1.3).abs() < 1e-12);
        assert!((fit.intercept - 0.2).abs() < 1e-11);
        assert!(!fit.truncated);
        assert_eq!(fit.samples, 33);
    }

    #[test]
    fn decay_fit_flags_floored_samples() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let sups = vec![1.0, 0.1, 0.0, 1e-20];
        let fit = decay_fit(&times, &sups, (0.0, 3.0)).unwrap();
        assert!(fit.truncated);
        assert_eq!(fit.samples, 2);
        assert!(decay_fit(&times, &[0.0, 0.0, 0.0, 0.0], (0.0, 3.0)).is_err());
        assert!(decay_fit(&times, &sups, (3.0, 1.0)).is_err());
    }

    #[test]
    fn harnack_bound_of_the_threefold_example() {
        let problem = threefold_problem(512);
        let hb = theoretical_harnack_bound(&problem).unwrap();
        assert!((hb.m1 - 23.3081112394).abs() < 1e-7);
        assert!((hb.bound - 6.96349199921e30).abs() < 1e-5 * hb.bound);
    }

    #[test]
    fn enclosing_circle_cases() {
        let g = TangentAngleGrid::new(16, 1).unwrap();
        let mk = |pts: [(f64, f64); 16]| {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            PlaneCurve::from_coords(g, x, y).unwrap()
        };
        let zero = mk([(0.0, 0.0); 16]);

        // Distance of a curve to its own translate is zero.
        let base: Vec<(f64, f64)> = (0..16)
            .map(|i| {
                let t = i as f64 / 16.0 * std::f64::consts::TAU;
                (t.cos(), t.sin())
            })
            .collect();
        let curve = mk(base.clone().try_into().unwrap());
        let moved = mk(base
            .iter()
            .map(|&(x, y)| (x + 0.37, y - 1.2))
            .collect::<Vec<_>>()
            .try_into()
            .unwrap());
        let d = curve_distance_mod_translation(&curve, &moved).unwrap();
        assert!(d < 1e-12, "translate distance {d:e}");

        // Concentric circles differ exactly by the radius gap.
        let bigger = mk(base
            .iter()
            .map(|&(x, y)| (1.3 * x, 1.3 * y))
            .collect::<Vec<_>>()
            .try_into()
            .unwrap());
        let d = curve_distance_mod_translation(&curve, &bigger).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "radius gap distance {d}");

        // Distance to the degenerate origin curve is the enclosing radius of
        // the curve itself: 1 for the unit circle.
        let d = curve_distance_mod_translation(&curve, &zero).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enclosing_circle_handles_collinear_points() {
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (4.0, 0.0), (2.5, 0.0)];
        let (cx, cy, r) = super::enclosing_circle(&pts);
        assert!((cx - 2.0).abs() < 1e-12 && cy.abs() < 1e-12);
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_sweep_is_clean_on_a_short_run() {
        let problem = threefold_problem(128);
        let result = run(
            &problem,
            &SolverConfig {
                dt: 1e-3,
                t_end: 0.2,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let checks = sweep_bounds(&problem, &result.diagnostics).unwrap();
        assert_eq!(checks.len(), 5);
        for check in &checks {
            assert_eq!(check.violations, 0, "{} violated: {:?}", check.name, check);
            assert!(check.worst_margin >= 0.0);
        }
    }

    #[test]
    fn bound_sweep_counts_injected_violations() {
        let problem = threefold_problem(128);
        let result = run(
            &problem,
            &SolverConfig {
                dt: 1e-3,
                t_end: 0.01,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let mut diags = result.diagnostics.clone();
        diags[3].rho_min = -0.1;
        diags[5].closure_defect = 1.0;
        let checks = sweep_bounds(&problem, &diags).unwrap();
        let by_name = |n: &str| checks.iter().find(|c| c.name == n).unwrap();
        assert_eq!(by_name("positivity").violations, 1);
        assert!(by_name("positivity").worst_margin < 0.0);
        assert!(by_name("closure").violations >= 1);
    }

    #[test]
    fn report_of_a_matched_run_finds_a_vanishing_shift() {
        // n = 256: the limit constant is recovered from quadrature energies,
        // so the resolution must put the aliasing floor below the gate
        // (n = 128 leaves it near 5e-8).
        let problem = threefold_problem(256);
        let result = run(
            &problem,
            &SolverConfig {
                dt: 1e-3,
                t_end: 1.0,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let report = build_report(&problem, &result, None).unwrap();
        // Energy was matched, so the limit is the target itself.
        assert!(
            report.limit_constant.abs() < 1e-9,
            "c0 = {:e}",
            report.limit_constant
        );
        assert!(report.decay.slope < -1.0);
        assert!(report.final_sup_u < report.harnack.bound);
        assert!(report.final_curve_distance.is_finite());
        assert_eq!(report.bounds.len(), 5);
        for check in &report.bounds {
            assert_eq!(check.violations, 0, "{}", check.name);
        }
    }
}
