//! Locally convex plane curves of winding `m`, represented on the tangent
//! angle circle.
//!
//! A curve is described either by its support function `p(θ)` or by its
//! radius of curvature `ρ(θ) = p + p_θθ > 0`, both sampled on a uniform grid
//! over `[0, 2πm)`. The two representations convert into each other
//! spectrally; the only subtlety is that `p ↦ p + p_θθ` annihilates the two
//! translation modes `e^{±iθ}`, so recovering a support function needs a
//! reference to pin them.

use serde::{Deserialize, Serialize};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::FourierWorkspace;

/// Uniform collocation grid on `[0, 2πm)`: `n` nodes, winding number `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangentAngleGrid {
    m: u32,
    n: usize,
}

impl TangentAngleGrid {
    pub fn new(n: usize, m: u32) -> Result<Self> {
        // Workspace construction enforces the grid constraints.
        FourierWorkspace::new(n, m)?;
        Ok(Self { m, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.m as f64
    }

    pub fn dtheta(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let d = self.dtheta();
        (0..self.n).map(|i| i as f64 * d).collect()
    }

    pub fn workspace(&self) -> FourierWorkspace {
        FourierWorkspace::new(self.n, self.m).expect("grid was validated on construction")
    }
}

/// One trigonometric term `a sin(kθ/m) + b cos(kθ/m)` of a support function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub sin: f64,
    pub cos: f64,
}

/// Closed-form support function `p(θ) = c + Σ_k a_k sin(kθ/m) + b_k cos(kθ/m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSupportSpec {
    pub constant: f64,
    pub harmonics: Vec<Harmonic>,
}

impl TrigSupportSpec {
    pub fn new(constant: f64, harmonics: Vec<Harmonic>) -> Self {
        Self {
            constant,
            harmonics,
        }
    }

    /// Largest harmonic index, 0 for a pure constant.
    pub fn max_index(&self) -> u32 {
        self.harmonics.iter().map(|h| h.k).max().unwrap_or(0)
    }
}

/// Support function samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportProfile {
    grid: TangentAngleGrid,
    values: Vec<f64>,
}

/// Radius of curvature samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusProfile {
    grid: TangentAngleGrid,
    values: Vec<f64>,
}

macro_rules! profile_impl {
    ($ty:ident, $what:literal) => {
        impl $ty {
            pub fn from_values(grid: TangentAngleGrid, values: Vec<f64>) -> Result<Self> {
                if values.len() != grid.n() {
                    return Err(Error::Invalid(format!(
                        concat!($what, " sample count {} does not match grid size {}"),
                        values.len(),
                        grid.n()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Invalid(format!(
                        concat!($what, " samples must be finite, found {}"),
                        v
                    )));
                }
                Ok(Self { grid, values })
            }

            pub fn grid(&self) -> TangentAngleGrid {
                self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }
        }
    };
}

profile_impl!(SupportProfile, "support");
profile_impl!(RadiusProfile, "radius");

/// Node positions of a reconstructed curve.
#[derive(Debug, Clone)]
pub struct PlaneCurve {
    grid: TangentAngleGrid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PlaneCurve {
    pub fn from_coords(grid: TangentAngleGrid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.n() || y.len() != grid.n() {
            return Err(Error::Invalid(format!(
                "coordinate count ({}, {}) does not match grid size {}",
                x.len(),
                y.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, x, y })
    }

    pub fn grid(&self) -> TangentAngleGrid {
        self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.x.len() as f64;
        (
            self.x.iter().sum::<f64>() / n,
            self.y.iter().sum::<f64>() / n,
        )
    }
}

/// Scalar shape summary of a radius profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometricSummary {
    /// Total arc length `∮ ρ dθ`.
    pub length: f64,
    /// Elastic energy `∮ dθ/ρ`, the conserved quantity of the flow.
    pub elastic_energy: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Magnitude of `∮ ρ e^{iθ} dθ`; zero iff the curve closes.
    pub closure_defect: f64,
}

/// Sample a trigonometric support function on a grid.
///
/// Requires `n > 4 k_max` so that products like `κ² u` stay resolved during a
/// flow started from this data.
pub fn eval_trig_support(spec: &TrigSupportSpec, grid: TangentAngleGrid) -> Result<SupportProfile> {
    if spec.harmonics.iter().any(|h| h.k == 0) {
        return Err(Error::Invalid(
            "harmonic index 0 is the constant term; use `constant` instead".into(),
        ));
    }
    let k_max = spec.max_index();
    if grid.n() <= 4 * k_max as usize {
        return Err(Error::Invalid(format!(
            "grid size {} cannot resolve harmonic index {} (need n > {})",
            grid.n(),
            k_max,
            4 * k_max
        )));
    }
    let m = grid.m() as f64;
    let values = grid
        .nodes()
        .iter()
        .map(|&t| {
            spec.constant
                + spec
                    .harmonics
                    .iter()
                    .map(|h| {
                        h.sin * (h.k as f64 / m * t).sin() + h.cos * (h.k as f64 / m * t).cos()
                    })
                    .sum::<f64>()
        })
        .collect();
    SupportProfile::from_values(grid, values)
}

/// Radius of curvature `ρ = p + p_θθ` of a support function.
pub fn radius_from_support(support: &SupportProfile) -> RadiusProfile {
    let ws = support.grid.workspace();
    let p_tt = ws.derivative(&support.values, 2);
    let values = support
        .values
        .iter()
        .zip(&p_tt)
        .map(|(p, d)| p + d)
        .collect();
    RadiusProfile::from_values(support.grid, values).expect("derived samples stay on the grid")
}

/// Invert `ρ = p + p_θθ` for the support function.
///
/// The operator kills the translation modes `e^{±iθ}` (DFT bins `±m`), so
/// those two coefficients are copied from `reference`; everything else is a
/// clean division by `1 − q²`.
pub fn support_from_radius(
    radius: &RadiusProfile,
    reference: &SupportProfile,
) -> Result<SupportProfile> {
    if radius.grid != reference.grid {
        return Err(Error::Invalid(
            "radius and reference support live on different grids".into(),
        ));
    }
    let grid = radius.grid;
    let (n, m) = (grid.n(), grid.m() as usize);
    if 2 * m >= n {
        return Err(Error::Invalid(format!(
            "grid size {n} cannot separate the translation modes of winding {m}"
        )));
    }
    let ws = grid.workspace();
    let mut hat = ws.forward(&radius.values);
    let ref_hat = ws.forward(&reference.values);
    let q = ws.wavenumbers();
    for i in 0..n {
        if i == m || i == n - m {
            hat[i] = ref_hat[i];
        } else {
            hat[i] /= 1.0 - q[i] * q[i];
        }
    }
    SupportProfile::from_values(grid, ws.inverse(&hat))
}

/// Magnitude of the closure integral `∮ ρ e^{iθ} dθ`.
///
/// A radius profile is the curvature radius of a closed curve exactly when
/// this vanishes; the flow preserves it to roundoff.
pub fn closure_defect(radius: &RadiusProfile) -> f64 {
    let ws = radius.grid.workspace();
    let mut sum = Complex64::new(0.0, 0.0);
    for (&rho, &t) in radius.values.iter().zip(radius.grid.nodes().iter()) {
        sum += rho * Complex64::new(0.0, t).exp();
    }
    (ws.dtheta() * sum).norm()
}

/// Trace the curve with tangent `(cos θ, sin θ)` and curvature radius `ρ`,
/// starting at the origin: `X(θ) = ∫_0^θ ρ e^{iφ} dφ`.
pub fn reconstruct_curve(radius: &RadiusProfile) -> PlaneCurve {
    let ws = radius.grid.workspace();
    let samples: Vec<Complex64> = radius
        .values
        .iter()
        .zip(radius.grid.nodes())
        .map(|(&rho, t)| rho * Complex64::new(0.0, t).exp())
        .collect();
    let path = ws.path_integral(&samples);
    let (x, y) = path.iter().map(|c| (c.re, c.im)).unzip();
    PlaneCurve::from_coords(radius.grid, x, y).expect("path has one point per node")
}

/// Node positions straight from a support function:
/// `X(θ) = p_θ (cos θ, sin θ) − p (−sin θ, cos θ)`.
///
/// Agrees with [`reconstruct_curve`] of the induced radius up to the
/// translation fixed by the support function's `e^{±iθ}` content.
pub fn curve_from_support(support: &SupportProfile) -> PlaneCurve {
    let ws = support.grid.workspace();
    let p_t = ws.derivative(&support.values, 1);
    let nodes = support.grid.nodes();
    let mut x = Vec::with_capacity(nodes.len());
    let mut y = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        let (s, c) = nodes[i].sin_cos();
        x.push(p_t[i] * c + support.values[i] * s);
        y.push(p_t[i] * s - support.values[i] * c);
    }
    PlaneCurve::from_coords(support.grid, x, y).expect("one point per node")
}

/// Scalar summary of a positive radius profile.
pub fn summarize(radius: &RadiusProfile) -> Result<GeometricSummary> {
    let rho_min = radius.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let rho_max = radius
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if rho_min <= 0.0 {
        return Err(Error::Invalid(format!(
            "radius profile is not locally convex: min ρ = {rho_min}"
        )));
    }
    let ws = radius.grid.workspace();
    let inv: Vec<f64> = radius.values.iter().map(|&r| 1.0 / r).collect();
    Ok(GeometricSummary {
        length: ws.quadrature(&radius.values),
        elastic_energy: ws.quadrature(&inv),
        rho_min,
        rho_max,
        closure_defect: closure_defect(radius),
    })
}

/// Winding number of a closed polyline: accumulated turning of the segment
/// directions divided by `2π`.
pub fn winding_number(curve: &PlaneCurve) -> Result<i32> {
    let n = curve.x.len();
    let seg = |i: usize| {
        let j = (i + 1) % n;
        (curve.x[j] - curve.x[i], curve.y[j] - curve.y[i])
    };
    let mut total = 0.0;
    let (mut px, mut py) = seg(0);
    if px == 0.0 && py == 0.0 {
        return Err(Error::Invalid("degenerate curve segment".into()));
    }
    for i in 1..=n {
        let (cx, cy) = seg(i % n);
        if cx == 0.0 && cy == 0.0 {
            return Err(Error::Invalid("degenerate curve segment".into()));
        }
        // Signed turning angle between consecutive segments, in (−π, π].
        total += (px * cy - py * cx).atan2(px * cx + py * cy);
        (px, py) = (cx, cy);
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.1 {
        return Err(Error::Invalid(format!(
            "total turning {winding:.4} turns is not close to an integer"
        )));
    }
    Ok(rounded as i32)
}

/// Repeat a radius profile `k` times around the circle, multiplying the
/// winding number by `k` while keeping the node spacing.
pub fn mfold_cover(base: &RadiusProfile, k: u32) -> Result<RadiusProfile> {
    if k == 0 {
        return Err(Error::Invalid(
            "cover multiplicity must be at least 1".into(),
        ));
    }
    let grid = TangentAngleGrid::new(base.grid.n() * k as usize, base.grid.m() * k)?;
    let values = base.values.iter().cloned().cycle().take(grid.n()).collect();
    RadiusProfile::from_values(grid, values)
}

/// Scale a radius profile so its elastic energy equals `desired`.
///
/// Energy scales inversely with size, so the factor is `λ = E/desired`;
/// returns the scaled profile together with `λ`.
pub fn rescale_to_match_energy(
    radius: &RadiusProfile,
    desired: f64,
) -> Result<(RadiusProfile, f64)> {
    if !desired.is_finite() || desired <= 0.0 {
        return Err(Error::Invalid(format!(
            "desired energy must be positive and finite, got {desired}"
        )));
    }
    let energy = summarize(radius)?.elastic_energy;
    let lambda = energy / desired;
    let values = radius.values.iter().map(|v| v * lambda).collect();
    Ok((RadiusProfile::from_values(radius.grid, values)?, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn grid(n: usize, m: u32) -> TangentAngleGrid {
        TangentAngleGrid::new(n, m).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trig_support_needs_resolution() {
        let spec = TrigSupportSpec::new(
            10.0,
            vec![Harmonic {
                k: 4,
                sin: 9.0,
                cos: 9.0,
            }],
        );
        assert!(eval_trig_support(&spec, grid(16, 3)).is_err());
        assert!(eval_trig_support(&spec, grid(18, 3)).is_ok());
        let zero_k = TrigSupportSpec::new(
            1.0,
            vec![Harmonic {
                k: 0,
                sin: 0.0,
                cos: 1.0,
            }],
        );
        assert!(eval_trig_support(&zero_k, grid(64, 1)).is_err());
    }

    #[test]
    fn radius_of_trig_support_is_analytic() {
        // p = 2 + 0.3 sin(2θ) on winding 1: ρ = p + p'' = 2 − 0.9 sin(2θ).
        let spec = TrigSupportSpec::new(
            2.0,
            vec![Harmonic {
                k: 2,
                sin: 0.3,
                cos: 0.0,
            }],
        );
        let g = grid(64, 1);
        let rho = radius_from_support(&eval_trig_support(&spec, g).unwrap());
        let exact: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&t| 2.0 - 0.9 * (2.0 * t).sin())
            .collect();
        assert!(max_abs_diff(rho.values(), &exact) < 1e-12);
    }

    #[test]
    fn support_recovery_takes_translation_modes_from_reference() {
        let g = grid(96, 3);
        let spec = TrigSupportSpec::new(
            10.0,
            vec![
                Harmonic {
                    k: 2,
                    sin: 10.0,
                    cos: 10.0,
                },
                Harmonic {
                    k: 4,
                    sin: 2.0,
                    cos: 0.0,
                },
            ],
        );
        let p = eval_trig_support(&spec, g).unwrap();
        let rho = radius_from_support(&p);

        // Reference that differs from p exactly in the e^{±iθ} modes (k = m).
        let mut shifted = spec.clone();
        shifted.harmonics.push(Harmonic {
            k: 3,
            sin: 0.7,
            cos: -0.2,
        });
        let reference = eval_trig_support(&shifted, g).unwrap();

        let recovered = support_from_radius(&rho, &reference).unwrap();
        let expect: Vec<f64> = g
            .nodes()
            .iter()
            .zip(p.values())
            .map(|(&t, &pv)| pv + 0.7 * t.sin() - 0.2 * t.cos())
            .collect();
        assert!(max_abs_diff(recovered.values(), &expect) < 1e-10);
    }

    #[test]
    fn closure_defect_flags_translation_content() {
        // Winding 1: a k = 1 harmonic in ρ is exactly the non-closing mode.
        let g = grid(64, 1);
        let closed = RadiusProfile::from_values(g, vec![5.0; 64]).unwrap();
        assert!(closure_defect(&closed) < 1e-12);

        let open_vals: Vec<f64> = g.nodes().iter().map(|&t| 5.0 + 0.5 * t.sin()).collect();
        let open = RadiusProfile::from_values(g, open_vals).unwrap();
        // ∮ 0.5 sin θ e^{iθ} dθ = 0.5 iπ.
        assert!((closure_defect(&open) - 0.5 * PI).abs() < 1e-10);
    }

    #[test]
    fn unit_circle_reconstructs_through_origin() {
        let g = grid(64, 1);
        let rho = RadiusProfile::from_values(g, vec![1.0; 64]).unwrap();
        let curve = reconstruct_curve(&rho);
        assert!(curve.x()[0].abs() < 1e-14 && curve.y()[0].abs() < 1e-14);
        for i in 0..64 {
            let r = (curve.x()[i].powi(2) + (curve.y()[i] - 1.0).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12, "node {i}");
        }
        assert_eq!(winding_number(&curve).unwrap(), 1);
    }

    #[test]
    fn cover_multiplies_winding_length_and_energy() {
        let g = grid(64, 1);
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&t| 3.0 + 0.4 * (2.0 * t).cos())
            .collect();
        let base = RadiusProfile::from_values(g, vals).unwrap();
        let cover = mfold_cover(&base, 3).unwrap();
        assert_eq!(cover.grid().m(), 3);
        assert_eq!(cover.grid().n(), 192);

        let s_base = summarize(&base).unwrap();
        let s_cover = summarize(&cover).unwrap();
        assert!((s_cover.length - 3.0 * s_base.length).abs() < 1e-9);
        assert!((s_cover.elastic_energy - 3.0 * s_base.elastic_energy).abs() < 1e-12);
        assert_eq!(winding_number(&reconstruct_curve(&cover)).unwrap(), 3);
    }

    #[test]
    fn curve_from_support_matches_reconstruction_up_to_translation() {
        let g = grid(256, 3);
        let spec = TrigSupportSpec::new(
            10.0,
            vec![Harmonic {
                k: 2,
                sin: 10.0,
                cos: 10.0,
            }],
        );
        let p = eval_trig_support(&spec, g).unwrap();
        let direct = curve_from_support(&p);
        let traced = reconstruct_curve(&radius_from_support(&p));

        let (dcx, dcy) = direct.centroid();
        let (tcx, tcy) = traced.centroid();
        for i in 0..g.n() {
            let dx = (direct.x()[i] - dcx) - (traced.x()[i] - tcx);
            let dy = (direct.y()[i] - dcy) - (traced.y()[i] - tcy);
            assert!(dx.abs() < 1e-8 && dy.abs() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn summary_of_shifted_profile_is_analytic() {
        // ρ = c + a cos(2θ): length 2πc, extrema c ± a.
        let g = grid(128, 1);
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&t| 4.0 + 0.5 * (2.0 * t).cos())
            .collect();
        let s = summarize(&RadiusProfile::from_values(g, vals).unwrap()).unwrap();
        assert!((s.length - 8.0 * PI).abs() < 1e-10);
        assert!((s.rho_min - 3.5).abs() < 1e-12);
        assert!((s.rho_max - 4.5).abs() < 1e-12);
        assert!(s.closure_defect < 1e-10);
    }

    #[test]
    fn summarize_rejects_nonconvex_data() {
        let g = grid(32, 1);
        let mut vals = vec![1.0; 32];
        vals[7] = -0.25;
        assert!(summarize(&RadiusProfile::from_values(g, vals).unwrap()).is_err());
    }

    #[test]
    fn rescaling_hits_the_requested_energy() {
        let g = grid(64, 2);
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&t| 2.0 + 0.3 * t.sin().powi(2))
            .collect();
        let rho = RadiusProfile::from_values(g, vals).unwrap();
        let (scaled, lambda) = rescale_to_match_energy(&rho, 1.25).unwrap();
        let e = summarize(&scaled).unwrap().elastic_energy;
        assert!((e - 1.25).abs() < 1e-12 * 1.25);
        assert!(lambda > 0.0);
        assert!(rescale_to_match_energy(&rho, 0.0).is_err());
    }

    #[test]
    fn winding_rejects_degenerate_polylines() {
        let g = grid(16, 1);
        let flat = PlaneCurve::from_coords(g, vec![0.0; 16], vec![0.0; 16]).unwrap();
        assert!(winding_number(&flat).is_err());
    }
}
