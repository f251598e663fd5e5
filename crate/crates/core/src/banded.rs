//! Complex symmetric banded `LDLᵀ` factorization for the shifted band matrix
//! `H - z` with `Im z != 0`.
//!
//! No pivoting: with `Im(H - z) = -Im(z)·I` every pivot satisfies
//! `|d_k| >= |Im z|`, so the elimination is stable.

use num_complex::Complex64;

use crate::band_model::SampledBandMatrix;
use crate::error::{Error, Result};

/// Unit lower factor `L` (band `W`) and diagonal `D` of `A = L D Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandLdl {
    dim: usize,
    band: usize,
    /// `lower[i * band + (i - j - 1)] = L(i, j)` for `i - band <= j < i`.
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
}

const PIVOT_FLOOR: f64 = 1e-300;

/// Factors `H - z` on the sampled window.
pub fn factor_shifted(m: &SampledBandMatrix, z: Complex64) -> Result<BandLdl> {
    let dim = m.dim();
    let w = m.spec().band_width();
    let s = m.scale();
    let mut lower = vec![Complex64::new(0.0, 0.0); dim * w];
    let mut diag = vec![Complex64::new(0.0, 0.0); dim];
    // t[k] = L(i, i - k - 1) · D(i - k - 1) for the current row
    let mut t = vec![Complex64::new(0.0, 0.0); w];
    for i in 0..dim {
        let width = w.min(i);
        // columns j = i - width .. i in increasing order
        for c in (0..width).rev() {
            let j = i - c - 1;
            let a = f64::from(m.upper_row_signs(j)[c]) * s;
            let mut acc = Complex64::new(a, 0.0);
            // k runs over i - width .. j, i.e. offsets from i: width-1 down to c+1
            for ck in (c + 1)..width {
                let k = i - ck - 1;
                acc -= t[ck] * lower[j * w + (j - k - 1)];
            }
            let l = acc / diag[j];
            lower[i * w + c] = l;
            t[c] = l * diag[j];
        }
        let mut d = -z;
        for c in 0..width {
            d -= t[c] * lower[i * w + c];
        }
        if !(d.norm() > PIVOT_FLOOR) || !d.re.is_finite() || !d.im.is_finite() {
            return Err(Error::SolverBreakdown { row: i, pivot: d.norm() });
        }
        diag[i] = d;
    }
    Ok(BandLdl {
        dim,
        band: w,
        lower,
        diag,
    })
}

impl BandLdl {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(A⁻¹)(c, c) = Σ_k y_k² / d_k` with `y = L⁻¹ e_c`.
    pub fn inverse_diagonal(&self, c: usize) -> Complex64 {
        let w = self.band;
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim - c];
        y[0] = Complex64::new(1.0, 0.0);
        let mut g = y[0] * y[0] / self.diag[c];
        for i in (c + 1)..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for off in 0..w.min(i - c) {
                acc -= self.lower[i * w + off] * y[i - off - 1 - c];
            }
            y[i - c] = acc;
            g += acc * acc / self.diag[i];
        }
        g
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: b.len(),
            });
        }
        let w = self.band;
        let mut x = b.to_vec();
        for i in 0..self.dim {
            let mut acc = x[i];
            for off in 0..w.min(i) {
                acc -= self.lower[i * w + off] * x[i - off - 1];
            }
            x[i] = acc;
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for i in (0..self.dim).rev() {
            let mut acc = x[i];
            for off in 0..w.min(self.dim - 1 - i) {
                let r = i + off + 1;
                acc -= self.lower[r * w + off] * x[r];
            }
            x[i] = acc;
        }
        Ok(x)
    }
}

/// `(H - z)⁻¹(0, 0)` on the sampled window.
pub fn resolvent_at_origin(m: &SampledBandMatrix, z: Complex64) -> Result<Complex64> {
    let ldl = factor_shifted(m, z)?;
    Ok(ldl.inverse_diagonal(m.spec().radius()))
}
