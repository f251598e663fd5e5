//! `F_q(ξ) = ∫ exp(-2πixξ - x^{2q}) dx` for complex `ξ`.
//!
//! The integration line is shifted to `x = t + iy` with `y` chosen to
//! minimise the peak of the integrand's modulus. This keeps the quadrature
//! free of cancellation where `|F_q|` is small.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{KernelParams, NEGLIGIBLE};
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_refined;

const SHIFT_CANDIDATES: usize = 41;
const PEAK_SAMPLES: usize = 161;
/// Integrand drop, in e-folds, regarded as negligible at the line ends.
const TAIL_DROP: f64 = 46.0;

fn exponent(q: u32, xi: Complex64, x: Complex64) -> Complex64 {
    -2.0 * PI * Complex64::i() * x * xi - x.powi(2 * q as i32)
}

fn peak_on_line(q: u32, xi: Complex64, y: f64, reach: f64) -> f64 {
    (0..PEAK_SAMPLES)
        .map(|k| {
            let t = -reach + 2.0 * reach * k as f64 / (PEAK_SAMPLES - 1) as f64;
            exponent(q, xi, Complex64::new(t, y)).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `F_q(ξ)` to relative accuracy `tol` against the integrand's peak.
pub fn fourier_q(q: u32, xi: Complex64, tol: f64) -> Result<Complex64> {
    if q == 0 {
        return Err(invalid("q", "must be a positive integer"));
    }
    if !xi.re.is_finite() || !xi.im.is_finite() {
        return Err(invalid("xi", "must be finite"));
    }
    // F(-conj ξ) = conj F(ξ)
    if xi.re < 0.0 {
        return fourier_q(q, -xi.conj(), tol).map(|z| z.conj());
    }
    let qf = f64::from(q);
    let saddle = (PI * xi.norm() / qf).powf(1.0 / (2.0 * qf - 1.0));
    let base = (TAIL_DROP).powf(1.0 / (2.0 * qf));
    let reach = 2.0 * saddle + base + 1.0;
    let span = 1.5 * saddle + 0.5;
    let mut best = (0.0, peak_on_line(q, xi, 0.0, reach));
    for k in 0..SHIFT_CANDIDATES {
        let y = -span + 2.0 * span * k as f64 / (SHIFT_CANDIDATES - 1) as f64;
        let p = peak_on_line(q, xi, y, reach);
        if p < best.1 {
            best = (y, p);
        }
    }
    let (y, peak) = best;
    if peak > 700.0 {
        return Err(Error::NonConvergence(format!("F_q overflows at xi = {xi}")));
    }
    // extend the line until both ends and the connecting verticals are negligible
    let mut t_end = reach;
    let ends_small = |t: f64| {
        (0..=4).all(|j| {
            let yy = y * f64::from(j) / 4.0;
            exponent(q, xi, Complex64::new(t, yy)).re < peak - TAIL_DROP
                && exponent(q, xi, Complex64::new(-t, yy)).re < peak - TAIL_DROP
        })
    };
    let mut guard = 0;
    while !ends_small(t_end) {
        t_end *= 1.25;
        guard += 1;
        if guard > 60 {
            return Err(Error::NonConvergence(format!("F_q line does not decay at xi = {xi}")));
        }
    }
    let integral = integrate_refined(-t_end, t_end, tol, 1.0, |t| {
        (exponent(q, xi, Complex64::new(t, y)) - peak).exp()
    })?;
    let value = integral * peak.exp();
    if xi.im == 0.0 {
        Ok(Complex64::new(value.re, 0.0))
    } else {
        Ok(value)
    }
}

/// `φ̂_q(ξ) = F_q(ξ)² / A_q`.
pub fn phi_hat(params: &KernelParams, xi: Complex64) -> Result<Complex64> {
    let f = fourier_q(params.q(), xi, params.tolerance())?;
    Ok(f * f / params.normalization())
}

/// Smallest `ξ > 0` on a 1/16 grid past which `φ̂_q` stays below a negligible
/// fraction of `φ̂_q(0)` on the real line.
pub(crate) fn hat_cutoff(params: &KernelParams) -> Result<f64> {
    let f0 = fourier_q(params.q(), Complex64::new(0.0, 0.0), params.tolerance())?.re;
    let mut xi = 0.0;
    let mut quiet = 0;
    let mut last_loud = 0.0;
    while quiet < 16 {
        xi += 1.0 / 16.0;
        let f = fourier_q(params.q(), Complex64::new(xi, 0.0), params.tolerance())?.re;
        if (f / f0).powi(2) < NEGLIGIBLE * 1e-2 {
            quiet += 1;
        } else {
            quiet = 0;
            last_loud = xi;
        }
        if xi > 1e3 {
            return Err(Error::NonConvergence("kernel transform does not decay".into()));
        }
    }
    Ok(last_loud + 1.0 / 16.0)
}

/// `(ξ, |F_q(ξ)|)` on `points` equally spaced nodes of `[0, xi_max]`.
pub fn fourier_profile(params: &KernelParams, xi_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(xi_max > 0.0) {
        return Err(invalid("points", "need at least two points on a positive range"));
    }
    (0..points)
        .map(|i| {
            let xi = xi_max * i as f64 / (points - 1) as f64;
            fourier_q(params.q(), Complex64::new(xi, 0.0), params.tolerance()).map(|f| (xi, f.norm()))
        })
        .collect()
}
