//! Fourier collocation on the tangent-angle circle.
//!
//! All fields live on `n` uniform nodes of the interval `[0, 2πm)`, where `m`
//! is the winding number of the curves being evolved. A DFT index `i` carries
//! the signed integer mode `j` (`i` for `i ≤ n/2`, else `i − n`) and the real
//! wavenumber `q = j/m`, so that differentiation is multiplication by
//! `(iq)^order` and the trapezoid sum is a spectrally accurate quadrature.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Cached FFT plans and mode tables for one `(n, m)` grid.
pub struct FourierWorkspace {
    n: usize,
    m: u32,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `q_i = j_i / m` with `j_i` the signed mode of DFT bin `i`.
    wavenumbers: Vec<f64>,
}

impl FourierWorkspace {
    /// Build plans for `n` nodes on the `m`-fold circle.
    ///
    /// `n` must be even and at least 16 so the dealiasing rules elsewhere in
    /// the crate have room to work with; `m ≥ 1`.
    pub fn new(n: usize, m: u32) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "grid size must be even and at least 16, got {n}"
            )));
        }
        if m == 0 {
            return Err(Error::Invalid("winding number must be at least 1".into()));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let wavenumbers = (0..n)
            .map(|i| {
                let j = if i <= n / 2 {
                    i as i64
                } else {
                    i as i64 - n as i64
                };
                j as f64 / m as f64
            })
            .collect();
        Ok(Self {
            n,
            m,
            fft,
            ifft,
            wavenumbers,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Full period `2πm` of the tangent angle.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.m as f64
    }

    /// Node spacing `2πm / n`.
    pub fn dtheta(&self) -> f64 {
        self.period() / self.n as f64
    }

    /// Collocation nodes `θ_i = i · Δθ`.
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.dtheta();
        (0..self.n).map(|i| i as f64 * d).collect()
    }

    /// Signed wavenumbers `q_i = j_i / m`, indexed like DFT bins.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, vals: &[f64]) -> Vec<Complex64> {
        assert_eq!(vals.len(), self.n, "sample count must match the grid");
        let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    /// Inverse of [`forward`](Self::forward): real part of the normalized
    /// inverse DFT.
    pub fn inverse(&self, hat: &[Complex64]) -> Vec<f64> {
        let mut buf = hat.to_vec();
        self.inverse_in_place(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Normalized inverse DFT, overwriting `buf` with physical-space values.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "coefficient count must match the grid");
        self.ifft.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Multiply DFT coefficients by `(iq)^order` in place.
    ///
    /// For odd orders the Nyquist bin is zeroed: the derivative of the real
    /// interpolant's unpaired cosine mode vanishes at the nodes.
    pub fn apply_derivative(&self, hat: &mut [Complex64], order: u32) {
        for (i, c) in hat.iter_mut().enumerate() {
            let iq = Complex64::new(0.0, self.wavenumbers[i]);
            *c *= iq.powu(order);
        }
        if order % 2 == 1 {
            hat[self.n / 2] = Complex64::new(0.0, 0.0);
        }
    }

    /// Spectral derivative of real samples.
    pub fn derivative(&self, vals: &[f64], order: u32) -> Vec<f64> {
        let mut hat = self.forward(vals);
        self.apply_derivative(&mut hat, order);
        self.inverse(&hat)
    }

    /// Spectrally accurate quadrature `∮ v dθ` over the full period.
    pub fn quadrature(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.n, "sample count must match the grid");
        self.dtheta() * vals.iter().sum::<f64>()
    }

    /// Cumulative integral `G(θ_i) = ∫_0^{θ_i} g dθ` of complex samples of a
    /// band-limited integrand, `G(0) = 0`.
    ///
    /// The mean of `g` contributes a linear term `c_0 θ`; every other mode is
    /// integrated exactly as `c_j (e^{iq_jθ} − 1)/(iq_j)`.
    pub fn path_integral(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.n, "sample count must match the grid");
        let mut hat = samples.to_vec();
        self.fft.process(&mut hat);
        let scale = 1.0 / self.n as f64;
        let c0 = hat[0] * scale;

        let mut b: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); self.n];
        let mut b_sum = Complex64::new(0.0, 0.0);
        for i in 1..self.n {
            let iq = Complex64::new(0.0, self.wavenumbers[i]);
            b[i] = hat[i] * scale / iq;
            b_sum += b[i];
        }
        // Unnormalized inverse evaluates Σ_j b_j e^{iq_jθ_i} at the nodes.
        self.ifft.process(&mut b);

        let d = self.dtheta();
        (0..self.n)
            .map(|i| c0 * (i as f64 * d) + b[i] - b_sum)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = std::f64::consts::TAU;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(FourierWorkspace::new(8, 1).is_err());
        assert!(FourierWorkspace::new(33, 1).is_err());
        assert!(FourierWorkspace::new(64, 0).is_err());
        assert!(FourierWorkspace::new(64, 3).is_ok());
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let ws = FourierWorkspace::new(32, 2).unwrap();
        let vals: Vec<f64> = (0..32).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
        let back = ws.inverse(&ws.forward(&vals));
        assert!(max_abs_diff(&vals, &back) < 1e-13);
    }

    #[test]
    fn derivative_of_harmonic_is_exact() {
        // d/dθ sin(kθ/m) = (k/m) cos(kθ/m), and the second derivative picks up
        // -(k/m)^2; both should hold to roundoff on a resolved grid.
        let ws = FourierWorkspace::new(64, 3).unwrap();
        let nodes = ws.nodes();
        let k = 4.0;
        let q = k / 3.0;
        let f: Vec<f64> = nodes.iter().map(|&t| (q * t).sin()).collect();
        let d1_exact: Vec<f64> = nodes.iter().map(|&t| q * (q * t).cos()).collect();
        let d2_exact: Vec<f64> = nodes.iter().map(|&t| -q * q * (q * t).sin()).collect();
        assert!(max_abs_diff(&ws.derivative(&f, 1), &d1_exact) < 1e-12);
        assert!(max_abs_diff(&ws.derivative(&f, 2), &d2_exact) < 1e-12);
    }

    #[test]
    fn odd_derivative_kills_nyquist() {
        let ws = FourierWorkspace::new(16, 1).unwrap();
        // Pure Nyquist signal (-1)^i: its spectral first derivative at the
        // nodes is identically zero, not garbage.
        let vals: Vec<f64> = (0..16)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let d1 = ws.derivative(&vals, 1);
        assert!(d1.iter().all(|v| v.abs() < 1e-12));
        // Even orders keep it: second derivative scales by -(n/2m)^2.
        let d2 = ws.derivative(&vals, 2);
        let expect: Vec<f64> = vals.iter().map(|v| -64.0 * v).collect();
        assert!(max_abs_diff(&d2, &expect) < 1e-9);
    }

    #[test]
    fn quadrature_integrates_harmonics_exactly() {
        let ws = FourierWorkspace::new(48, 3).unwrap();
        let nodes = ws.nodes();
        // ∮ 1 dθ = 2πm; every resolved non-constant harmonic integrates to 0.
        let ones = vec![1.0; 48];
        assert!((ws.quadrature(&ones) - 3.0 * TAU).abs() < 1e-12);
        for k in [1u32, 2, 5, 9] {
            let f: Vec<f64> = nodes.iter().map(|&t| (k as f64 / 3.0 * t).cos()).collect();
            assert!(ws.quadrature(&f).abs() < 1e-11, "k = {k}");
        }
    }

    #[test]
    fn path_integral_matches_analytic_antiderivative() {
        let ws = FourierWorkspace::new(64, 2).unwrap();
        let nodes = ws.nodes();
        // g(θ) = 1.5 + e^{iθ/2}: G(θ) = 1.5θ + (e^{iθ/2} − 1)/(i/2).
        let samples: Vec<Complex64> = nodes
            .iter()
            .map(|&t| Complex64::new(1.5, 0.0) + Complex64::new(0.0, 0.5 * t).exp())
            .collect();
        let g = ws.path_integral(&samples);
        let half_i = Complex64::new(0.0, 0.5);
        for (i, &t) in nodes.iter().enumerate() {
            let exact =
                Complex64::new(1.5 * t, 0.0) + (Complex64::new(0.0, 0.5 * t).exp() - 1.0) / half_i;
            assert!((g[i] - exact).norm() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn path_integral_starts_at_zero_and_traces_a_circle() {
        let ws = FourierWorkspace::new(64, 1).unwrap();
        let nodes = ws.nodes();
        let samples: Vec<Complex64> = nodes
            .iter()
            .map(|&t| Complex64::new(0.0, t).exp())
            .collect();
        let g = ws.path_integral(&samples);
        assert!(g[0].norm() < 1e-14);
        // ∫_0^θ e^{iφ} dφ = (e^{iθ} − 1)/i: the unit circle through the origin.
        for (i, &t) in nodes.iter().enumerate() {
            let exact = (Complex64::new(0.0, t).exp() - 1.0) / Complex64::new(0.0, 1.0);
            assert!((g[i] - exact).norm() < 1e-12, "node {i}");
        }
    }
}
