//! The `φ_q` kernel family, its Fourier transform, the regularized delta
//! kernel, divided differences and the generating function `S_ε`.

mod delta;
mod divided;
mod fourier;
mod series;

pub use delta::{delta_kernel_eval, delta_kernel_series, poisson_m_range, poisson_rhs, poisson_rhs_complex, DeltaKernel};
pub use divided::{
    complete_homogeneous, divided_difference, divided_difference_explicit, simplex_moment_sum, DEFAULT_POINT_FLOOR,
};
pub use fourier::{fourier_profile, fourier_q, phi_hat};
pub use series::{s_eps, s_eps_divided, s_eps_with, RayContour, SeriesMethod};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_refined_real;

/// Relative size below which a kernel value counts as zero.
pub(crate) const NEGLIGIBLE: f64 = 1e-18;

/// `(q, ε, η)` with the normalization `A_q = ∫ exp(-2 s^{2q}) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    q: u32,
    epsilon: f64,
    eta: f64,
    normalization: f64,
    tolerance: f64,
    singularity_floor: f64,
}

impl KernelParams {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;
    pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-9;

    pub fn new(q: u32, epsilon: f64, eta: f64) -> Result<Self> {
        Self::with_tolerance(q, epsilon, eta, Self::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(q: u32, epsilon: f64, eta: f64, tolerance: f64) -> Result<Self> {
        if q == 0 {
            return Err(invalid("q", "must be a positive integer"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive and finite"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta", "must be positive and finite"));
        }
        if !(tolerance > 0.0 && tolerance < 0.1) {
            return Err(invalid("tolerance", "must lie in (0, 0.1)"));
        }
        let normalization = normalization(q, tolerance.min(1e-13))?;
        Ok(Self {
            q,
            epsilon,
            eta,
            normalization,
            tolerance,
            singularity_floor: Self::DEFAULT_SINGULARITY_FLOOR,
        })
    }

    pub fn with_singularity_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(invalid("singularity_floor", "must be positive"));
        }
        self.singularity_floor = floor;
        Ok(self)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive and finite"));
        }
        Ok(Self { epsilon, ..*self })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `A_q`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn singularity_floor(&self) -> f64 {
        self.singularity_floor
    }

    /// `n_0 = ⌊W^η / ε⌋`.
    pub fn cutoff_degree(&self, band_width: usize) -> usize {
        ((band_width as f64).powf(self.eta) / self.epsilon).floor() as usize
    }

    /// Messages for parameters outside the regime where the error bounds
    /// are proved.
    pub fn regime_warnings(&self) -> Vec<String> {
        let q = f64::from(self.q);
        let mut out = Vec::new();
        if (2.0 * q - 1.0) / (2.0 * q) <= 0.99 {
            out.push(format!("(2q-1)/(2q) = {:.4} does not exceed 0.99", (2.0 * q - 1.0) / (2.0 * q)));
        }
        let need = (self.eta + 0.99) / (2.0 * self.eta);
        if q <= need {
            out.push(format!("q = {} does not exceed (eta + 0.99)/(2 eta) = {need:.4}", self.q));
        }
        out
    }
}

fn normalization(q: u32, tol: f64) -> Result<f64> {
    let p = 2 * q as i32;
    let wall = 0.5f64.powf(1.0 / f64::from(p));
    let reach = (0.5 * (1.0 / NEGLIGIBLE).ln()).powf(1.0 / f64::from(p)) + 1.0;
    let f = |s: f64| (-2.0 * s.powi(p)).exp();
    let inner = integrate_refined_real(0.0, wall, tol, 1e-300, f)?;
    let outer = integrate_refined_real(wall, reach.max(wall + 1.0), tol, 1e-300, f)?;
    Ok(2.0 * (inner + outer))
}

/// `φ_q(t) = A_q⁻¹ ∫ exp(-s^{2q} - (t-s)^{2q}) ds`, evaluated at `|t|` so
/// that evenness is exact.
pub fn phi_q(params: &KernelParams, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(invalid("t", "must be finite"));
    }
    let h = 0.5 * t.abs();
    let p = 2 * params.q as i32;
    // s = h + u turns the integrand into an even function of u
    let f = |u: f64| (-(h + u).powi(p) - (h - u).powi(p)).exp();
    let tail = ((1.0 / NEGLIGIBLE).ln()).powf(1.0 / f64::from(p)) + 1.0;
    let reach = h + tail;
    let tol = params.tolerance.min(1e-13);
    let wall = (1.0 - h).abs();
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [wall, reach] {
        if hi > lo {
            total += integrate_refined_real(lo, hi, tol, 1e-300, f)?;
            lo = hi;
        }
    }
    Ok(2.0 * total / params.normalization)
}

/// `φ̃(t) = φ_q(t)·1{|t| <= W^η}`.
pub fn phi_truncated(params: &KernelParams, t: f64, band_width: usize) -> Result<f64> {
    if band_width == 0 {
        return Err(invalid("W", "must be at least 1"));
    }
    if t.abs() > (band_width as f64).powf(params.eta) {
        return Ok(0.0);
    }
    phi_q(params, t)
}

/// `φ_q(nε)` for `n = 0..=n_max`, where `n_max` is the first index with a
/// negligible value.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    epsilon: f64,
    values: Vec<f64>,
}

const MAX_TABLE: usize = 5_000_000;

impl PhiTable {
    pub fn new(params: &KernelParams) -> Result<Self> {
        let mut values = vec![1.0];
        loop {
            let n = values.len();
            let v = phi_q(params, n as f64 * params.epsilon)?;
            values.push(v);
            if v < NEGLIGIBLE {
                break;
            }
            if n >= MAX_TABLE {
                return Err(Error::NonConvergence(format!(
                    "kernel still above {NEGLIGIBLE:e} after {MAX_TABLE} terms"
                )));
            }
        }
        Ok(Self {
            epsilon: params.epsilon,
            values,
        })
    }

    /// Table truncated or extended to exactly `n_max + 1` entries.
    pub fn with_len(params: &KernelParams, n_max: usize) -> Result<Self> {
        let mut t = Self::new(params)?;
        if t.values.len() > n_max + 1 {
            t.values.truncate(n_max + 1);
        } else {
            t.values.resize(n_max + 1, 0.0);
        }
        Ok(t)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `φ_q(nε)`, zero beyond the table.
    pub fn get(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `(t, φ_q(t))` on `points` equally spaced nodes of `[0, t_max]`.
pub fn kernel_profile(params: &KernelParams, t_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(t_max > 0.0) {
        return Err(invalid("points", "need at least two points on a positive range"));
    }
    (0..points)
        .map(|i| {
            let t = t_max * i as f64 / (points - 1) as f64;
            phi_q(params, t).map(|v| (t, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn normalization_matches_gamma() {
        for q in [1u32, 2, 3, 4, 8] {
            let p = KernelParams::new(q, 0.1, 0.5).unwrap();
            let qf = f64::from(q);
            let exact = gamma(1.0 / (2.0 * qf)) / (qf * 2f64.powf(1.0 / (2.0 * qf)));
            assert!((p.normalization() - exact).abs() < 1e-12 * exact, "q={q}");
        }
    }

    #[test]
    fn phi_at_zero_is_one() {
        for q in [1u32, 2, 5, 51] {
            let p = KernelParams::new(q, 0.1, 0.5).unwrap();
            assert!((phi_q(&p, 0.0).unwrap() - 1.0).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn gaussian_case() {
        let p = KernelParams::new(1, 0.1, 0.5).unwrap();
        for i in 0..=80 {
            let t = -4.0 + 0.1 * f64::from(i);
            assert!((phi_q(&p, t).unwrap() - (-t * t / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn even_and_decreasing() {
        let p = KernelParams::new(2, 0.1, 0.5).unwrap();
        let mut prev = 2.0;
        for i in 0..60 {
            let t = 0.1 * f64::from(i);
            let v = phi_q(&p, t).unwrap();
            assert_eq!(v, phi_q(&p, -t).unwrap());
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn large_q_tends_to_overlap() {
        // exp(-s^{2q}) tends to the indicator of [-1, 1]
        let p = KernelParams::new(51, 0.1, 0.5).unwrap();
        let v = phi_q(&p, 1.0).unwrap();
        assert!((v - 0.5).abs() < 0.02, "{v}");
    }

    #[test]
    fn truncation() {
        let p = KernelParams::new(2, 0.1, 0.5).unwrap();
        assert_eq!(phi_truncated(&p, 4.01, 16).unwrap(), 0.0);
        assert!(phi_truncated(&p, 3.99, 16).unwrap() > 0.0);
        assert_eq!(phi_truncated(&p, 0.0, 16).unwrap(), 1.0);
        let p = KernelParams::new(2, 0.1, 7.0).unwrap();
        assert_eq!(phi_truncated(&p, 1.01, 1).unwrap(), 0.0);
        assert!(phi_truncated(&p, 1.0, 1).unwrap() > 0.0);
    }

    #[test]
    fn cutoff_degree() {
        let p = KernelParams::new(2, 0.05, 0.5).unwrap();
        assert_eq!(p.cutoff_degree(16), 80);
    }

    #[test]
    fn regime_flags() {
        assert_eq!(KernelParams::new(2, 0.1, 0.5).unwrap().regime_warnings().len(), 1);
        assert!(KernelParams::new(51, 0.1, 0.5).unwrap().regime_warnings().is_empty());
        assert_eq!(KernelParams::new(51, 0.1, 0.005).unwrap().regime_warnings().len(), 1);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(0, 0.1, 0.5).is_err());
        assert!(KernelParams::new(1, -0.1, 0.5).is_err());
        assert!(KernelParams::new(1, 0.1, 0.0).is_err());
    }

    #[test]
    fn table_ends_negligible() {
        let p = KernelParams::new(2, 0.05, 0.5).unwrap();
        let t = PhiTable::new(&p).unwrap();
        assert!(t.get(t.n_max()) < NEGLIGIBLE);
        assert!(t.get(t.n_max() - 1) >= NEGLIGIBLE);
        assert_eq!(t.get(t.n_max() + 10), 0.0);
    }
}
