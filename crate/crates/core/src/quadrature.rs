//! Gauss–Legendre quadrature on panels, with panel doubling and adaptive
//! bisection. Integrands are complex; real integrands wrap trivially.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

const RULE_POINTS: usize = 20;
const MAX_PANELS: usize = 1 << 14;
const MAX_DEPTH: usize = 48;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(RULE_POINTS).expect("nonzero"));
        gl.as_node_weight_pairs().to_vec()
    })
}

/// One Gauss–Legendre panel on `[a, b]`.
pub fn panel<F: FnMut(f64) -> Complex64>(a: f64, b: f64, f: &mut F) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, w) in rule() {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Sum over `panels` equal panels of `[a, b]`.
pub fn composite<F: FnMut(f64) -> Complex64>(a: f64, b: f64, panels: usize, f: &mut F) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + h * k as f64;
        acc += panel(lo, lo + h, f);
    }
    acc
}

/// Doubles the panel count until two successive values agree to
/// `tol · max(|I|, scale)`.
pub fn integrate_refined<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    tol: f64,
    scale: f64,
    mut f: F,
) -> Result<Complex64> {
    let mut panels = 4;
    let mut prev = composite(a, b, panels, &mut f);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = composite(a, b, panels, &mut f);
        if (cur - prev).norm() <= tol * cur.norm().max(scale) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "panel refinement on [{a}, {b}] did not reach tolerance {tol}"
    )))
}

pub fn integrate_refined_real<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, scale: f64, mut f: F) -> Result<f64> {
    integrate_refined(a, b, tol, scale, |x| Complex64::new(f(x), 0.0)).map(|z| z.re)
}

/// Adaptive bisection with an absolute error target.
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<Complex64> {
    let whole = panel(a, b, &mut f);
    adapt(a, b, whole, tol, 0, &mut f)
}

fn adapt<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: usize,
    f: &mut F,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let left = panel(a, m, f);
    let right = panel(m, b, f);
    let split = left + right;
    if (split - whole).norm() <= tol {
        return Ok(split);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NonConvergence(format!(
            "adaptive quadrature exceeded depth {MAX_DEPTH} near [{a}, {b}]"
        )));
    }
    Ok(adapt(a, m, left, 0.5 * tol, depth + 1, f)? + adapt(m, b, right, 0.5 * tol, depth + 1, f)?)
}

pub fn integrate_adaptive_real<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<f64> {
    integrate_adaptive(a, b, tol, |x| Complex64::new(f(x), 0.0)).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let v = panel(-1.0, 2.0, &mut |x| Complex64::new(x.powi(7), 0.0));
        assert!((v.re - (2f64.powi(8) - 1.0) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn refined_gaussian() {
        let v = integrate_refined_real(-10.0, 10.0, 1e-14, 1.0, |x| (-x * x).exp()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_peak() {
        let eps = 1e-3;
        let v = integrate_adaptive_real(-1.0, 1.0, 1e-12, |x| eps / (x * x + eps * eps)).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn complex_oscillation() {
        let v = integrate_refined(0.0, 1.0, 1e-14, 1.0, |x| Complex64::new(0.0, 2.0 * std::f64::consts::PI * x).exp())
            .unwrap();
        assert!(v.norm() < 1e-13);
    }
}
