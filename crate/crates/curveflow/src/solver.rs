//! Time integration of the nonlocal curvature flow.
//!
//! The radius of curvature evolves by
//!
//! ```text
//! ∂ρ/∂t = ρ_θθ − ρ̃_θθ − (ρ − ρ̃) − f(t)
//! ```
//!
//! where `ρ̃` belongs to the fixed target curve and the scalar `f(t)` is
//! chosen at every instant so the elastic energy `∮ dθ/ρ` stays constant:
//!
//! ```text
//! f(t) = [∮ κ²(ρ_θθ − ρ̃_θθ) dθ − ∮ κ²(ρ − ρ̃) dθ] / ∮ κ² dθ,   κ = 1/ρ.
//! ```
//!
//! In Fourier space the local part is the diagonal operator `L̂ = −(1 + q²)`
//! acting on each wavenumber `q`, plus the state-independent source
//! `(1 + q²) ρ̃̂`; only `f` couples the modes. The integrators exploit that
//! split, and all of them reproduce the stationary family `ρ̃ + c` to
//! roundoff because the source is assembled spectrally from the same
//! coefficients the linear operator sees.
//!
//! The same flow can be driven through the support function,
//! `∂p/∂t = p_θθ − p + 2p̃ − ρ̃ − f(t)`, which this module integrates with the
//! identical machinery; the two formulations agree to solver accuracy.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    radius_from_support, support_from_radius, RadiusProfile, SupportProfile, TangentAngleGrid,
};
use crate::spectral::FourierWorkspace;

/// Closure integral magnitude beyond which curve data is rejected.
pub const CLOSURE_TOLERANCE: f64 = 1e-8;

/// Available time integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential integrator: exact on the linear part, `f` evaluated at the
    /// step start and corrected at a midpoint evaluation. Second order, and
    /// the default.
    Etd2,
    /// Crank–Nicolson on the linear part with an explicit trapezoidal
    /// predictor–corrector on `f`. Second order with a larger error constant
    /// than [`Scheme::Etd2`].
    ImexCn,
    /// Classical fourth-order Runge–Kutta on the full right-hand side.
    /// Conditionally stable; meant as a small-step reference oracle.
    Rk4Explicit,
}

/// Step size, horizon, scheme and guard rails for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Times at which the state is captured; each request is matched to the
    /// nearest step and recorded with that step's actual time.
    pub snapshot_times: Vec<f64>,
    /// Abort when the relative energy drift exceeds this.
    pub energy_drift_abort: f64,
    /// Abort when min ρ falls to or below this.
    pub positivity_floor: f64,
    /// Debug switch that flips the sign of the nonlocal term. The term exists
    /// to keep the elastic energy constant, so a run with this set drifts
    /// immediately — handy for checking that the drift guard and the bound
    /// sweep really detect a non-conservative flow.
    pub negate_nonlocal_term: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 4.0,
            scheme: Scheme::Etd2,
            snapshot_times: Vec::new(),
            energy_drift_abort: 1e-4,
            positivity_floor: 1e-8,
            negate_nonlocal_term: false,
        }
    }
}

impl SolverConfig {
    /// Number of steps; errors unless `t_end` is a whole number of steps.
    pub fn step_count(&self) -> Result<u64> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Invalid(format!(
                "step size must be positive, got {}",
                self.dt
            )));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::Invalid(format!(
                "final time must be nonnegative, got {}",
                self.t_end
            )));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > self.dt * 1e-6 {
            return Err(Error::Invalid(format!(
                "final time {} is not a whole number of steps of size {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as u64)
    }

    fn validate(&self) -> Result<()> {
        self.step_count()?;
        if !self.energy_drift_abort.is_finite() || self.energy_drift_abort <= 0.0 {
            return Err(Error::Invalid(
                "energy drift abort threshold must be positive and finite".into(),
            ));
        }
        if !self.positivity_floor.is_finite() || self.positivity_floor < 0.0 {
            return Err(Error::Invalid(
                "positivity floor must be finite and nonnegative".into(),
            ));
        }
        for &s in &self.snapshot_times {
            if !(0.0..=self.t_end + self.dt * 1e-9).contains(&s) {
                return Err(Error::Invalid(format!(
                    "snapshot time {s} lies outside [0, {}]",
                    self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// Initial curve, target curve, shared grid.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    grid: TangentAngleGrid,
    initial: RadiusProfile,
    target_support: SupportProfile,
    target_radius: RadiusProfile,
}

impl FlowProblem {
    /// Validate and pair an initial radius profile with a target support
    /// function.
    ///
    /// Both curves must live on the same grid (same winding number and
    /// resolution), be locally convex, and close to within
    /// [`CLOSURE_TOLERANCE`].
    pub fn new(initial: RadiusProfile, target_support: SupportProfile) -> Result<Self> {
        if initial.grid().m() != target_support.grid().m() {
            return Err(Error::Invalid(format!(
                "initial and target winding numbers differ ({} vs {}); the flow only connects curves of equal winding",
                initial.grid().m(),
                target_support.grid().m()
            )));
        }
        if initial.grid() != target_support.grid() {
            return Err(Error::Invalid(format!(
                "initial and target grids differ ({} vs {} nodes)",
                initial.grid().n(),
                target_support.grid().n()
            )));
        }
        let target_radius = radius_from_support(&target_support);
        for (name, rho) in [("initial", &initial), ("target", &target_radius)] {
            let min = rho.values().iter().cloned().fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                return Err(Error::Invalid(format!(
                    "{name} curve is not locally convex: min ρ = {min}"
                )));
            }
            let defect = crate::geometry::closure_defect(rho);
            if defect > CLOSURE_TOLERANCE {
                return Err(Error::Invalid(format!(
                    "{name} curve does not close: closure defect {defect:.3e}"
                )));
            }
        }
        Ok(Self {
            grid: initial.grid(),
            initial,
            target_support,
            target_radius,
        })
    }

    pub fn grid(&self) -> TangentAngleGrid {
        self.grid
    }

    pub fn initial(&self) -> &RadiusProfile {
        &self.initial
    }

    pub fn target_support(&self) -> &SupportProfile {
        &self.target_support
    }

    pub fn target_radius(&self) -> &RadiusProfile {
        &self.target_radius
    }

    pub fn initial_state(&self) -> FlowState {
        FlowState {
            t: 0.0,
            rho: self.initial.clone(),
        }
    }
}

/// The evolving radius profile at one instant.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub rho: RadiusProfile,
}

/// Per-step scalar record of the run.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub f_value: f64,
    pub energy: f64,
    pub length: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Instantaneous `max ρ / min ρ`.
    pub harnack_ratio: f64,
    pub closure_defect: f64,
    /// `sup |ρ − ρ̃|`.
    pub sup_u: f64,
    /// `sup |∂θ(ρ − ρ̃)|`.
    pub sup_u_theta: f64,
}

/// Everything a completed run produced.
#[derive(Debug)]
pub struct RunResult {
    /// One state per requested snapshot time, in request order.
    pub snapshots: Vec<FlowState>,
    /// Row 0 describes the initial state; one row per step after that.
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: FlowState,
}

/// Result of driving the flow through the support function.
#[derive(Debug)]
pub struct SupportRun {
    pub snapshots: Vec<(f64, SupportProfile)>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_support: SupportProfile,
}

/// Which field the integrator advances.
#[derive(Clone, Copy, PartialEq)]
enum Formulation {
    Radius,
    Support,
}

/// The energy-preserving scalar `f` for a given state.
pub fn nonlocal_term(problem: &FlowProblem, rho: &RadiusProfile) -> Result<f64> {
    let ws = problem.grid.workspace();
    check_same_grid(problem, rho)?;
    let rho_tt = ws.derivative(rho.values(), 2);
    let target_tt = ws.derivative(problem.target_radius.values(), 2);
    eval_f(
        &ws,
        rho.values(),
        &rho_tt,
        problem.target_radius.values(),
        &target_tt,
    )
}

/// Right-hand side `ρ_θθ − ρ̃_θθ − (ρ − ρ̃) − f` together with `f` itself.
pub fn velocity(problem: &FlowProblem, rho: &RadiusProfile) -> Result<(Vec<f64>, f64)> {
    let ws = problem.grid.workspace();
    check_same_grid(problem, rho)?;
    let rho_tt = ws.derivative(rho.values(), 2);
    let target_tt = ws.derivative(problem.target_radius.values(), 2);
    let f = eval_f(
        &ws,
        rho.values(),
        &rho_tt,
        problem.target_radius.values(),
        &target_tt,
    )?;
    let v = (0..ws.n())
        .map(|i| {
            rho_tt[i] - target_tt[i] - (rho.values()[i] - problem.target_radius.values()[i]) - f
        })
        .collect();
    Ok((v, f))
}

/// Outward normal speed `β = 2p − ρ − 2p̃ + ρ̃ + f` of the moving curve,
/// sampled at the nodes.
///
/// `β` vanishes on every parallel translate of the target — the nonlocal
/// term converges to minus the shift and cancels it — so `sup |β| → 0` even
/// when the flow lands on `ρ̃ + c₀` rather than `ρ̃` itself, making it a
/// clean convergence diagnostic alongside `sup |u|`.
pub fn normal_velocity_diagnostic(problem: &FlowProblem, rho: &RadiusProfile) -> Result<Vec<f64>> {
    check_same_grid(problem, rho)?;
    let p = support_from_radius(rho, &problem.target_support)?;
    let f = nonlocal_term(problem, rho)?;
    Ok((0..problem.grid.n())
        .map(|i| {
            2.0 * p.values()[i] - rho.values()[i] - 2.0 * problem.target_support.values()[i]
                + problem.target_radius.values()[i]
                + f
        })
        .collect())
}

/// Advance a state by one step of the given scheme.
pub fn step(
    problem: &FlowProblem,
    state: &FlowState,
    dt: f64,
    scheme: Scheme,
) -> Result<FlowState> {
    check_same_grid(problem, &state.rho)?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Invalid(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let mut stepper = Stepper::new(problem, scheme, dt, Formulation::Radius)?;
    stepper.load_field(state.rho.values());
    stepper.advance()?;
    Ok(FlowState {
        t: state.t + dt,
        rho: RadiusProfile::from_values(problem.grid, stepper.rho.clone())?,
    })
}

/// Run the flow on the radius formulation.
pub fn run(problem: &FlowProblem, config: &SolverConfig) -> Result<RunResult> {
    let raw = run_formulation(problem, config, Formulation::Radius)?;
    let snapshots = raw
        .snapshots
        .into_iter()
        .map(|(t, vals)| {
            Ok(FlowState {
                t,
                rho: RadiusProfile::from_values(problem.grid, vals)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let final_state = FlowState {
        t: raw.final_field.0,
        rho: RadiusProfile::from_values(problem.grid, raw.final_field.1)?,
    };
    Ok(RunResult {
        snapshots,
        diagnostics: raw.diagnostics,
        final_state,
    })
}

/// Run the flow on the support-function formulation.
///
/// The initial support is recovered from the initial radius with the target's
/// translation modes, so the evolving curve starts out gauged against the
/// target.
pub fn evolve_support(problem: &FlowProblem, config: &SolverConfig) -> Result<SupportRun> {
    let raw = run_formulation(problem, config, Formulation::Support)?;
    let snapshots = raw
        .snapshots
        .into_iter()
        .map(|(t, vals)| Ok((t, SupportProfile::from_values(problem.grid, vals)?)))
        .collect::<Result<Vec<_>>>()?;
    let final_support = SupportProfile::from_values(problem.grid, raw.final_field.1)?;
    Ok(SupportRun {
        snapshots,
        diagnostics: raw.diagnostics,
        final_support,
    })
}

type FieldSnapshots = Vec<(f64, Vec<f64>)>;

/// Raw integration output shared by the two formulations: sampled fields at
/// the snapshot steps, per-step diagnostics, and the final `(t, field)`.
struct RawRun {
    snapshots: FieldSnapshots,
    diagnostics: Vec<StepDiagnostics>,
    final_field: (f64, Vec<f64>),
}

fn run_formulation(
    problem: &FlowProblem,
    config: &SolverConfig,
    formulation: Formulation,
) -> Result<RawRun> {
    config.validate()?;
    let steps = config.step_count()?;
    let mut stepper = Stepper::new(problem, config.scheme, config.dt, formulation)?;
    stepper.negate_f = config.negate_nonlocal_term;
    match formulation {
        Formulation::Radius => stepper.load_field(problem.initial.values()),
        Formulation::Support => {
            let p0 = support_from_radius(&problem.initial, &problem.target_support)?;
            stepper.load_field(p0.values());
        }
    }

    // Each request maps to its nearest step; the snapshot records that step's
    // actual time.
    let mut requested: Vec<u64> = config
        .snapshot_times
        .iter()
        .map(|&s| ((s / config.dt).round() as u64).min(steps))
        .collect();
    requested.sort_unstable();
    let mut next_snapshot = 0;

    let first = stepper.diagnostics(0.0)?;
    let energy0 = first.energy;
    let mut diagnostics = vec![first];
    check_guards(&diagnostics[0], energy0, config)?;

    let mut snapshots: FieldSnapshots = Vec::new();
    while next_snapshot < requested.len() && requested[next_snapshot] == 0 {
        snapshots.push((0.0, stepper.field.clone()));
        next_snapshot += 1;
    }

    for i in 1..=steps {
        stepper.advance()?;
        let t = i as f64 * config.dt;
        let diag = stepper.diagnostics(t)?;
        check_guards(&diag, energy0, config)?;
        diagnostics.push(diag);
        while next_snapshot < requested.len() && requested[next_snapshot] == i {
            snapshots.push((t, stepper.field.clone()));
            next_snapshot += 1;
        }
    }

    let t_final = steps as f64 * config.dt;
    Ok(RawRun {
        snapshots,
        diagnostics,
        final_field: (t_final, stepper.field.clone()),
    })
}

fn check_guards(diag: &StepDiagnostics, energy0: f64, config: &SolverConfig) -> Result<()> {
    if !diag.energy.is_finite() || !diag.rho_min.is_finite() {
        return Err(Error::Solver(format!(
            "state became non-finite at t = {}",
            diag.t
        )));
    }
    if diag.rho_min <= config.positivity_floor {
        return Err(Error::Solver(format!(
            "positivity lost at t = {}: min ρ = {:.6e} fell to the floor {:.1e}",
            diag.t, diag.rho_min, config.positivity_floor
        )));
    }
    let drift = (diag.energy - energy0).abs() / energy0.abs();
    if drift > config.energy_drift_abort {
        return Err(Error::Solver(format!(
            "energy drift {:.3e} exceeded the abort threshold {:.1e} at t = {}",
            drift, config.energy_drift_abort, diag.t
        )));
    }
    Ok(())
}

fn check_same_grid(problem: &FlowProblem, rho: &RadiusProfile) -> Result<()> {
    if rho.grid() != problem.grid {
        return Err(Error::Invalid(
            "state grid does not match the problem grid".into(),
        ));
    }
    Ok(())
}

/// `f` from physical-space samples; `κ² = 1/ρ²` weights the defect of the
/// local terms, making the full velocity `L²(κ²dθ)`-orthogonal to energy
/// changes.
fn eval_f(
    ws: &FourierWorkspace,
    rho: &[f64],
    rho_tt: &[f64],
    target: &[f64],
    target_tt: &[f64],
) -> Result<f64> {
    let mut num_diff = 0.0;
    let mut num_local = 0.0;
    let mut denom = 0.0;
    for i in 0..ws.n() {
        if !rho[i].is_finite() || rho[i] <= 0.0 {
            return Err(Error::Solver(format!(
                "positivity lost while evaluating the nonlocal term: ρ = {}",
                rho[i]
            )));
        }
        let k2 = 1.0 / (rho[i] * rho[i]);
        num_diff += k2 * (rho_tt[i] - target_tt[i]);
        num_local += k2 * (rho[i] - target[i]);
        denom += k2;
    }
    Ok((num_diff - num_local) / denom)
}

/// One integrator instance: cached spectra of the target, diagonal
/// propagator tables for the chosen scheme, and the current field.
struct Stepper {
    ws: FourierWorkspace,
    formulation: Formulation,
    dt: f64,
    scheme: Scheme,
    n: usize,
    /// Diagonal linear operator `L̂ = −(1 + q²)`.
    lin: Vec<f64>,
    /// Source spectrum: `(1+q²) ρ̃̂` (radius) or `(1+q²) p̃̂` (support); the
    /// spectral assembly is what keeps `ρ̃ + c` stationary to roundoff.
    source_hat: Vec<Complex64>,
    /// Factor mapping the advanced field's spectrum to `ρ̂` (1 or `1 − q²`).
    field_to_rho: Vec<f64>,
    /// Target radius and its second derivative, for `f`.
    target_rho: Vec<f64>,
    target_rho_tt: Vec<f64>,
    target_rho_theta: Vec<f64>,
    /// `e^{iθ_i}` table for the closure defect.
    phase: Vec<Complex64>,
    // Scheme tables (unused entries stay empty).
    exp_full: Vec<f64>,
    phi1_full: Vec<f64>,
    exp_half: Vec<f64>,
    phi1_half: Vec<f64>,
    cn_num: Vec<f64>,
    cn_den: Vec<f64>,
    // State.
    field_hat: Vec<Complex64>,
    field: Vec<f64>,
    rho: Vec<f64>,
    /// `f` for the current state, if already evaluated.
    cached_f: Option<f64>,
    /// Debug sign flip on `f`; see [`SolverConfig::negate_nonlocal_term`].
    negate_f: bool,
}

impl Stepper {
    fn new(
        problem: &FlowProblem,
        scheme: Scheme,
        dt: f64,
        formulation: Formulation,
    ) -> Result<Self> {
        let ws = problem.grid.workspace();
        let n = ws.n();
        let lin: Vec<f64> = ws.wavenumbers().iter().map(|&q| -(1.0 + q * q)).collect();

        let source_field = match formulation {
            Formulation::Radius => problem.target_radius.values(),
            Formulation::Support => problem.target_support.values(),
        };
        let mut source_hat = ws.forward(source_field);
        for (s, l) in source_hat.iter_mut().zip(&lin) {
            *s *= -l; // (1 + q²)
        }

        let field_to_rho: Vec<f64> = match formulation {
            Formulation::Radius => vec![1.0; n],
            Formulation::Support => ws.wavenumbers().iter().map(|&q| 1.0 - q * q).collect(),
        };

        let target_rho = problem.target_radius.values().to_vec();
        let target_rho_tt = ws.derivative(&target_rho, 2);
        let target_rho_theta = ws.derivative(&target_rho, 1);
        let phase = problem
            .grid
            .nodes()
            .iter()
            .map(|&t| Complex64::new(0.0, t).exp())
            .collect();

        let (mut exp_full, mut phi1_full, mut exp_half, mut phi1_half) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let (mut cn_num, mut cn_den) = (Vec::new(), Vec::new());
        match scheme {
            Scheme::Etd2 => {
                exp_full = lin.iter().map(|&l| (l * dt).exp()).collect();
                phi1_full = lin.iter().map(|&l| phi1(l * dt)).collect();
                exp_half = lin.iter().map(|&l| (l * dt / 2.0).exp()).collect();
                phi1_half = lin.iter().map(|&l| phi1(l * dt / 2.0)).collect();
            }
            Scheme::ImexCn => {
                cn_num = lin.iter().map(|&l| 1.0 + dt / 2.0 * l).collect();
                cn_den = lin.iter().map(|&l| 1.0 - dt / 2.0 * l).collect();
            }
            Scheme::Rk4Explicit => {}
        }

        Ok(Self {
            ws,
            formulation,
            dt,
            scheme,
            n,
            lin,
            source_hat,
            field_to_rho,
            target_rho,
            target_rho_tt,
            target_rho_theta,
            phase,
            exp_full,
            phi1_full,
            exp_half,
            phi1_half,
            cn_num,
            cn_den,
            field_hat: vec![Complex64::new(0.0, 0.0); n],
            field: vec![0.0; n],
            rho: vec![0.0; n],
            cached_f: None,
            negate_f: false,
        })
    }

    fn load_field(&mut self, values: &[f64]) {
        self.field = values.to_vec();
        self.field_hat = self.ws.forward(values);
        self.refresh_physical();
    }

    /// Recompute physical-space `field` and `ρ` from the current spectrum.
    fn refresh_physical(&mut self) {
        self.field = self.ws.inverse(&self.field_hat);
        match self.formulation {
            Formulation::Radius => self.rho.copy_from_slice(&self.field),
            Formulation::Support => {
                let rho_hat: Vec<Complex64> = self
                    .field_hat
                    .iter()
                    .zip(&self.field_to_rho)
                    .map(|(h, &f)| h * f)
                    .collect();
                self.rho = self.ws.inverse(&rho_hat);
            }
        }
        self.cached_f = None;
    }

    /// `f` for an arbitrary field spectrum.
    fn f_of_hat(&self, field_hat: &[Complex64]) -> Result<f64> {
        let mut rho_hat: Vec<Complex64> = field_hat
            .iter()
            .zip(&self.field_to_rho)
            .map(|(h, &f)| h * f)
            .collect();
        let rho = self.ws.inverse(&rho_hat);
        self.ws.apply_derivative(&mut rho_hat, 2);
        let rho_tt = self.ws.inverse(&rho_hat);
        let f = eval_f(
            &self.ws,
            &rho,
            &rho_tt,
            &self.target_rho,
            &self.target_rho_tt,
        )?;
        Ok(if self.negate_f { -f } else { f })
    }

    fn f_current(&mut self) -> Result<f64> {
        if let Some(f) = self.cached_f {
            return Ok(f);
        }
        let f = self.f_of_hat(&self.field_hat)?;
        self.cached_f = Some(f);
        Ok(f)
    }

    /// Nonlinear spectrum `N̂ = source − f·n·δ_0` for a given `f`.
    fn nonlinear_hat(&self, f: f64) -> Vec<Complex64> {
        let mut nhat = self.source_hat.clone();
        nhat[0] -= Complex64::new(f * self.n as f64, 0.0);
        nhat
    }

    fn advance(&mut self) -> Result<()> {
        match self.scheme {
            Scheme::Etd2 => self.step_etd2()?,
            Scheme::ImexCn => self.step_imex_cn()?,
            Scheme::Rk4Explicit => self.step_rk4()?,
        }
        self.refresh_physical();
        Ok(())
    }

    fn step_etd2(&mut self) -> Result<()> {
        let h = self.dt;
        let f0 = self.f_current()?;
        let n0 = self.nonlinear_hat(f0);
        // Half step with the start-point f, then a full step driven by the
        // midpoint evaluation: second order, exact on stationary data.
        let mid: Vec<Complex64> = (0..self.n)
            .map(|i| self.exp_half[i] * self.field_hat[i] + h / 2.0 * self.phi1_half[i] * n0[i])
            .collect();
        let f_mid = self.f_of_hat(&mid)?;
        let nm = self.nonlinear_hat(f_mid);
        for (i, &nmi) in nm.iter().enumerate() {
            self.field_hat[i] = self.exp_full[i] * self.field_hat[i] + h * self.phi1_full[i] * nmi;
        }
        Ok(())
    }

    fn step_imex_cn(&mut self) -> Result<()> {
        let h = self.dt;
        let f0 = self.f_current()?;
        let n0 = self.nonlinear_hat(f0);
        let predictor: Vec<Complex64> = (0..self.n)
            .map(|i| (self.cn_num[i] * self.field_hat[i] + h * n0[i]) / self.cn_den[i])
            .collect();
        let f1 = self.f_of_hat(&predictor)?;
        let n1 = self.nonlinear_hat(f1);
        for i in 0..self.n {
            self.field_hat[i] =
                (self.cn_num[i] * self.field_hat[i] + h / 2.0 * (n0[i] + n1[i])) / self.cn_den[i];
        }
        Ok(())
    }

    fn step_rk4(&mut self) -> Result<()> {
        let h = self.dt;
        let rhs = |s: &Stepper, hat: &[Complex64]| -> Result<Vec<Complex64>> {
            let f = s.f_of_hat(hat)?;
            let nhat = s.nonlinear_hat(f);
            Ok((0..s.n).map(|i| s.lin[i] * hat[i] + nhat[i]).collect())
        };
        let y = self.field_hat.clone();
        let k1 = rhs(self, &y)?;
        let y2: Vec<Complex64> = (0..self.n).map(|i| y[i] + h / 2.0 * k1[i]).collect();
        let k2 = rhs(self, &y2)?;
        let y3: Vec<Complex64> = (0..self.n).map(|i| y[i] + h / 2.0 * k2[i]).collect();
        let k3 = rhs(self, &y3)?;
        let y4: Vec<Complex64> = (0..self.n).map(|i| y[i] + h * k3[i]).collect();
        let k4 = rhs(self, &y4)?;
        for i in 0..self.n {
            self.field_hat[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }

    fn diagnostics(&mut self, t: f64) -> Result<StepDiagnostics> {
        let f_value = self.f_current()?;
        let mut length = 0.0;
        let mut energy = 0.0;
        let mut rho_min = f64::INFINITY;
        let mut rho_max = f64::NEG_INFINITY;
        let mut closure = Complex64::new(0.0, 0.0);
        let mut sup_u: f64 = 0.0;
        for i in 0..self.n {
            let r = self.rho[i];
            length += r;
            energy += 1.0 / r;
            rho_min = rho_min.min(r);
            rho_max = rho_max.max(r);
            closure += r * self.phase[i];
            sup_u = sup_u.max((r - self.target_rho[i]).abs());
        }
        let d = self.ws.dtheta();
        length *= d;
        energy *= d;

        // sup |∂θ(ρ − ρ̃)| via one transform of the current ρ.
        let mut rho_hat: Vec<Complex64> = self
            .field_hat
            .iter()
            .zip(&self.field_to_rho)
            .map(|(h, &fac)| h * fac)
            .collect();
        self.ws.apply_derivative(&mut rho_hat, 1);
        let rho_theta = self.ws.inverse(&rho_hat);
        let sup_u_theta = rho_theta
            .iter()
            .zip(&self.target_rho_theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        Ok(StepDiagnostics {
            t,
            f_value,
            energy,
            length,
            rho_min,
            rho_max,
            harnack_ratio: rho_max / rho_min,
            closure_defect: (closure * d).norm(),
            sup_u,
            sup_u_theta,
        })
    }
}

/// `φ₁(z) = (e^z − 1)/z`, the first exponential-integrator weight.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}
