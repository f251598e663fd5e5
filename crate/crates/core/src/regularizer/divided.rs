//! Divided differences over complex points.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Default minimum separation between divided-difference points.
pub const DEFAULT_POINT_FLOOR: f64 = 1e-12;

fn check_separation(points: &[Complex64], floor: f64) -> Result<()> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i] - points[j]).norm() < floor {
                return Err(Error::DegeneratePoints(i, j));
            }
        }
    }
    Ok(())
}

/// `f[z₁..z_E]` by `f[z₁..z_E] = (f[z₁..z_{E-1}] - f[z₂..z_E]) / (z₁ - z_E)`.
pub fn divided_difference(values: &[(Complex64, Complex64)], floor: f64) -> Result<Complex64> {
    if values.is_empty() {
        return Err(invalid("values", "need at least one point"));
    }
    let z: Vec<Complex64> = values.iter().map(|v| v.0).collect();
    check_separation(&z, floor)?;
    // level k holds f[z_i..z_{i+k}]
    let mut level: Vec<Complex64> = values.iter().map(|v| v.1).collect();
    for k in 1..values.len() {
        level = (0..values.len() - k)
            .map(|i| (level[i] - level[i + 1]) / (z[i] - z[i + k]))
            .collect();
    }
    Ok(level[0])
}

/// `Σ_e f(z_e) / Π_{f≠e} (z_e - z_f)`.
pub fn divided_difference_explicit(values: &[(Complex64, Complex64)], floor: f64) -> Result<Complex64> {
    if values.is_empty() {
        return Err(invalid("values", "need at least one point"));
    }
    let z: Vec<Complex64> = values.iter().map(|v| v.0).collect();
    check_separation(&z, floor)?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(e, &(ze, fe))| {
            let denom: Complex64 = z
                .iter()
                .enumerate()
                .filter(|&(f, _)| f != e)
                .map(|(_, &zf)| ze - zf)
                .product();
            fe / denom
        })
        .sum())
}

/// Complete homogeneous symmetric polynomials `h_0..=h_k` of `z`.
///
/// `h_k(z) = x^{k+E-1}[z₁..z_E]`, which stays finite at coincident points.
pub fn complete_homogeneous(z: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); k + 1];
    h[0] = Complex64::new(1.0, 0.0);
    for &zi in z {
        for j in 1..=k {
            let prev = h[j - 1];
            h[j] += zi * prev;
        }
    }
    h
}

/// `m_{n-1}[z₁..z_E] · Π z_e` with `m_{n-1}(x) = x^{n-1}`, through the
/// divided difference of the power function.
pub fn simplex_moment_sum(z: &[Complex64], n: usize, floor: f64) -> Result<Complex64> {
    if z.is_empty() {
        return Err(invalid("z", "need at least one point"));
    }
    if n < z.len() {
        return Err(invalid("n", "must be at least the number of points"));
    }
    let values: Vec<(Complex64, Complex64)> = z.iter().map(|&x| (x, x.powu(n as u32 - 1))).collect();
    let dd = divided_difference(&values, floor)?;
    Ok(dd * z.iter().product::<Complex64>())
}
