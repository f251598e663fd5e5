//! The random band matrix ensemble on a finite window `-N..=N` of the integers.
//!
//! `H(u, v) = ±1 / (2 sqrt(2W - 1))` for `0 < |u - v| <= W`, symmetric, zero
//! otherwise. Signs are drawn from a counter-based hash of
//! `(seed, min(u, v), max(u, v))`, so the realization on a larger window
//! restricts to the realization on a smaller one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Ensemble parameters for one realization on a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandMatrixSpec {
    band_width: usize,
    radius: usize,
    seed: u64,
}

impl BandMatrixSpec {
    pub fn new(band_width: usize, radius: usize, seed: u64) -> Result<Self> {
        if band_width == 0 {
            return Err(invalid("W", "band width must be at least 1"));
        }
        if radius < band_width {
            return Err(invalid(
                "N",
                format!("truncation radius {radius} must be at least the band width {band_width}"),
            ));
        }
        Ok(Self {
            band_width,
            radius,
            seed,
        })
    }

    pub fn band_width(&self) -> usize {
        self.band_width
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of sites, `2N + 1`.
    pub fn dim(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    pub fn with_radius(&self, radius: usize) -> Result<Self> {
        Self::new(self.band_width, radius, self.seed)
    }
}

/// Magnitude of every nonzero entry, `1 / (2 sqrt(2W - 1))`.
pub fn entry_magnitude(band_width: usize) -> f64 {
    0.5 / ((2 * band_width - 1) as f64).sqrt()
}

/// Smallest radius that makes `p(H)(0, 0)` exact for every polynomial of
/// degree `<= degree`: a length-`n` walk from 0 never leaves `[-nW, nW]`.
/// One extra band of slack is added.
pub fn truncation_radius_for_degree(degree: usize, band_width: usize) -> usize {
    degree * band_width + band_width
}

/// One realization of the ensemble.
///
/// Signs are stored per site and forward offset: `signs[(u + N) W + d - 1]`
/// holds the sign of `{u, u + d}`, or 0 when `u + d` lies outside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBandMatrix {
    spec: BandMatrixSpec,
    signs: Vec<i8>,
}

/// Draws the signs of `spec`'s realization.
pub fn sample_matrix(spec: BandMatrixSpec) -> SampledBandMatrix {
    SampledBandMatrix::sample(spec)
}

impl SampledBandMatrix {
    pub fn sample(spec: BandMatrixSpec) -> Self {
        let w = spec.band_width;
        let n = spec.radius as i64;
        let dim = spec.dim();
        let mut signs = vec![0i8; dim * w];
        for (i, row) in signs.chunks_mut(w).enumerate() {
            let u = i as i64 - n;
            for (k, s) in row.iter_mut().enumerate() {
                let v = u + k as i64 + 1;
                if v <= n {
                    *s = rng::edge_sign(spec.seed, u, v);
                }
            }
        }
        Self { spec, signs }
    }

    pub fn spec(&self) -> &BandMatrixSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn scale(&self) -> f64 {
        entry_magnitude(self.spec.band_width)
    }

    /// Sign of `H(u, v)` in `{-1, 0, 1}`; 0 off the band, on the diagonal and
    /// outside the window.
    pub fn sign(&self, u: i64, v: i64) -> i8 {
        let n = self.spec.radius as i64;
        let w = self.spec.band_width as i64;
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let d = hi - lo;
        if d == 0 || d > w || lo < -n || hi > n {
            return 0;
        }
        self.signs[((lo + n) * w + d - 1) as usize]
    }

    pub fn entry(&self, u: i64, v: i64) -> f64 {
        f64::from(self.sign(u, v)) * self.scale()
    }

    /// `y = H x` with `x` indexed by `u + N`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; dim];
        self.apply_window(x, &mut y, 0, dim);
        Ok(y)
    }

    /// Accumulates `H x` into `y` for the rows and columns `lo..hi` only.
    /// Entries of `x` outside `lo..hi` must be zero; entries of `y` outside the
    /// window are left untouched.
    pub(crate) fn apply_window(&self, x: &[f64], y: &mut [f64], lo: usize, hi: usize) {
        let w = self.spec.band_width;
        let s = self.scale();
        for v in &mut y[lo..hi] {
            *v = 0.0;
        }
        for i in lo..hi {
            let row = &self.signs[i * w..(i + 1) * w];
            let xi = x[i];
            let mut acc = 0.0;
            for (k, &sg) in row.iter().enumerate() {
                let j = i + k + 1;
                if j >= hi {
                    break;
                }
                let sg = f64::from(sg);
                acc += sg * x[j];
                y[j] += sg * xi;
            }
            y[i] += acc;
        }
        for v in &mut y[lo..hi] {
            *v *= s;
        }
    }

    /// Signs of `H(u, u + 1), ..., H(u, u + W)` for the window row `i = u + N`.
    pub(crate) fn upper_row_signs(&self, i: usize) -> &[i8] {
        let w = self.spec.band_width;
        &self.signs[i * w..(i + 1) * w]
    }

    /// Dense copy, for small windows in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.spec.radius as i64;
        (-n..=n)
            .map(|u| (-n..=n).map(|v| self.entry(u, v)).collect())
            .collect()
    }
}
