//! Chebyshev polynomials of scalars and of the band matrix, and Monte Carlo
//! estimates of their averaged `(0, 0)` entries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band_model::{BandMatrixSpec, SampledBandMatrix};
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::stats::Estimate;

/// First or second kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChebKind {
    T,
    U,
}

/// Which polynomial family a moment series refers to. `UnW` is the
/// non-backtracking combination `U_n - U_{n-2} / (2W - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentKind {
    T,
    U,
    UnW,
}

impl std::fmt::Display for MomentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentKind::T => "T",
            MomentKind::U => "U",
            MomentKind::UnW => "UnW",
        })
    }
}

impl std::str::FromStr for MomentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(MomentKind::T),
            "U" | "u" => Ok(MomentKind::U),
            "UnW" | "unw" | "U_nW" => Ok(MomentKind::UnW),
            other => Err(invalid("kind", format!("unknown moment kind `{other}`"))),
        }
    }
}

/// `T_n(x)` or `U_n(x)` by the three-term recursion. `U_{-1} = U_{-2} = 0`.
pub fn cheb_eval(kind: ChebKind, n: i64, x: f64) -> Result<f64> {
    match kind {
        ChebKind::T if n < 0 => Err(invalid("n", format!("T_n needs n >= 0, got {n}"))),
        ChebKind::U if n < -2 => Err(invalid("n", format!("U_n needs n >= -2, got {n}"))),
        ChebKind::U if n < 0 => Ok(0.0),
        _ => {
            let first = match kind {
                ChebKind::T => x,
                ChebKind::U => 2.0 * x,
            };
            if n == 0 {
                return Ok(1.0);
            }
            let (mut prev, mut cur) = (1.0, first);
            for _ in 1..n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            Ok(cur)
        }
    }
}

/// `T_0(x), ..., T_n(x)`.
pub fn cheb_t_table(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 2..=n {
        out.push(2.0 * x * out[k - 1] - out[k - 2]);
    }
    out
}

fn check_truncation(m: &SampledBandMatrix, degree: usize) -> Result<()> {
    let spec = m.spec();
    let required = degree * spec.band_width();
    if spec.radius() < required {
        return Err(Error::TruncationTooSmall {
            radius: spec.radius(),
            degree,
            band_width: spec.band_width(),
            required,
        });
    }
    Ok(())
}

/// `p_k(H)(0, 0)` for `k = 0..=max_degree` in one vector recursion started
/// from `δ_0`. The working vectors only ever touch the light cone `|u| <= kW`.
pub fn moments_at_00(m: &SampledBandMatrix, kind: MomentKind, max_degree: usize) -> Result<Vec<f64>> {
    check_truncation(m, max_degree)?;
    let spec = m.spec();
    let (w, radius, dim) = (spec.band_width(), spec.radius(), spec.dim());
    let window = |k: usize| {
        let reach = (k * w).min(radius);
        (radius - reach, radius + reach + 1)
    };

    let first_factor = match kind {
        MomentKind::T => 1.0,
        MomentKind::U | MomentKind::UnW => 2.0,
    };

    let mut prev = vec![0.0; dim];
    let mut cur = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    prev[radius] = 1.0;
    let mut raw = Vec::with_capacity(max_degree + 1);
    raw.push(1.0);
    if max_degree >= 1 {
        let (lo, hi) = window(1);
        m.apply_window(&prev, &mut cur, lo, hi);
        for v in &mut cur[lo..hi] {
            *v *= first_factor;
        }
        raw.push(cur[radius]);
    }
    for k in 2..=max_degree {
        let (lo, hi) = window(k);
        m.apply_window(&cur, &mut next, lo, hi);
        for i in lo..hi {
            next[i] = 2.0 * next[i] - prev[i];
        }
        raw.push(next[radius]);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }

    if kind == MomentKind::UnW {
        let c = 1.0 / (2 * w - 1) as f64;
        Ok((0..raw.len())
            .map(|n| if n >= 2 { raw[n] - c * raw[n - 2] } else { raw[n] })
            .collect())
    } else {
        Ok(raw)
    }
}

/// `p_n(H)(0, 0)` for a single degree.
pub fn poly_of_h_at_00(m: &SampledBandMatrix, kind: MomentKind, n: usize) -> Result<f64> {
    Ok(moments_at_00(m, kind, n)?[n])
}

/// Averaged moments with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub kind: MomentKind,
    pub band_width: usize,
    pub max_degree: usize,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub sample_count: usize,
}

impl MomentSeries {
    /// Exact (noise-free) series, e.g. from the path oracle or a model
    /// density.
    pub fn exact(kind: MomentKind, band_width: usize, values: Vec<f64>) -> Self {
        let max_degree = values.len().saturating_sub(1);
        Self {
            kind,
            band_width,
            max_degree,
            std_errors: vec![0.0; values.len()],
            values,
            sample_count: 0,
        }
    }

    /// Degrees at which a `T` series exceeds `1 + 3σ`. Values above 1 can only
    /// come from spectrum outside `[-1, 1]`, so these are flagged rather than
    /// rejected.
    pub fn soft_bound_violations(&self) -> Vec<usize> {
        if self.kind != MomentKind::T {
            return Vec::new();
        }
        self.values
            .iter()
            .zip(&self.std_errors)
            .enumerate()
            .filter(|(_, (v, s))| v.abs() > 1.0 + 3.0 * **s)
            .map(|(n, _)| n)
            .collect()
    }
}

/// Per-sample moment vectors, sample `i` drawn with seed
/// `sample_seed(spec.seed, i)`. Output order is sample order regardless of
/// how the work is scheduled.
pub fn sample_moments(
    spec: &BandMatrixSpec,
    kind: MomentKind,
    max_degree: usize,
    samples: usize,
) -> Result<Vec<Vec<f64>>> {
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    let required = max_degree * spec.band_width();
    if spec.radius() < required {
        return Err(Error::TruncationTooSmall {
            radius: spec.radius(),
            degree: max_degree,
            band_width: spec.band_width(),
            required,
        });
    }
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let m = SampledBandMatrix::sample(spec.with_seed(rng::sample_seed(spec.seed(), i)));
            moments_at_00(&m, kind, max_degree)
        })
        .collect()
}

/// Sample mean and standard error of `p_n(H)(0, 0)` for `n <= max_degree`.
pub fn estimate_moments(
    spec: &BandMatrixSpec,
    kind: MomentKind,
    max_degree: usize,
    samples: usize,
) -> Result<MomentSeries> {
    let per_sample = sample_moments(spec, kind, max_degree, samples)?;
    let mut values = Vec::with_capacity(max_degree + 1);
    let mut std_errors = Vec::with_capacity(max_degree + 1);
    let mut column = vec![0.0; samples];
    for n in 0..=max_degree {
        for (c, s) in column.iter_mut().zip(&per_sample) {
            *c = s[n];
        }
        let e = Estimate::from_samples(&column);
        values.push(e.mean);
        std_errors.push(e.std_error);
    }
    Ok(MomentSeries {
        kind,
        band_width: spec.band_width(),
        max_degree,
        values,
        std_errors,
        sample_count: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band_model::sample_matrix;
    use std::f64::consts::PI;

    #[test]
    fn scalar_examples() {
        assert_eq!(cheb_eval(ChebKind::T, 0, 0.123).unwrap(), 1.0);
        assert_eq!(cheb_eval(ChebKind::T, 2, 0.5).unwrap(), -0.5);
        assert!(cheb_eval(ChebKind::U, 2, (PI / 3.0).cos()).unwrap().abs() < 1e-15);
        assert_eq!(cheb_eval(ChebKind::U, -1, 0.3).unwrap(), 0.0);
        assert_eq!(cheb_eval(ChebKind::U, -2, 0.3).unwrap(), 0.0);
        assert!(cheb_eval(ChebKind::U, -3, 0.3).is_err());
        assert!(cheb_eval(ChebKind::T, -1, 0.3).is_err());
    }

    #[test]
    fn recursion_matches_closed_forms() {
        for i in 0..1000 {
            let theta = PI * (i as f64 + 0.5) / 1000.0;
            let x = theta.cos();
            let t = cheb_t_table(200, x);
            for n in 0..=200i64 {
                let tn = cheb_eval(ChebKind::T, n, x).unwrap();
                assert!((tn - (n as f64 * theta).cos()).abs() <= 1e-10);
                assert_eq!(tn, t[n as usize]);
            }
            for n in (0..=200i64).step_by(17) {
                let un = cheb_eval(ChebKind::U, n, x).unwrap();
                let closed = ((n + 1) as f64 * theta).sin() / theta.sin();
                assert!((un - closed).abs() <= 1e-10 * (1.0 + closed.abs()), "n={n}");
            }
        }
    }

    #[test]
    fn low_degree_matrix_values() {
        let m = sample_matrix(BandMatrixSpec::new(3, 30, 8).unwrap());
        assert_eq!(poly_of_h_at_00(&m, MomentKind::UnW, 0).unwrap(), 1.0);
        assert_eq!(poly_of_h_at_00(&m, MomentKind::UnW, 1).unwrap(), 0.0);
        assert_eq!(poly_of_h_at_00(&m, MomentKind::T, 1).unwrap(), 0.0);
        // U_{2,W}(H)(0, 0) = 4 H^2(0,0) - 1 - 1/(2W-1) = 0
        assert!(poly_of_h_at_00(&m, MomentKind::UnW, 2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn matches_dense_polynomial() {
        let spec = BandMatrixSpec::new(2, 14, 21).unwrap();
        let m = sample_matrix(spec);
        let h = m.to_dense();
        let dim = spec.dim();
        let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..dim)
                .map(|i| (0..dim).map(|j| (0..dim).map(|k| a[i][k] * b[k][j]).sum()).collect())
                .collect()
        };
        let eye: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| f64::from(i == j)).collect()).collect();
        let mut t = vec![eye.clone(), h.clone()];
        for k in 2..=7 {
            let hh = mul(&h, &t[k - 1]);
            let next = (0..dim)
                .map(|i| (0..dim).map(|j| 2.0 * hh[i][j] - t[k - 2][i][j]).collect())
                .collect();
            t.push(next);
        }
        let got = moments_at_00(&m, MomentKind::T, 7).unwrap();
        for k in 0..=7 {
            assert!((got[k] - t[k][14][14]).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn truncation_exactness() {
        for w in [1usize, 2, 4] {
            let small = sample_matrix(BandMatrixSpec::new(w, 3 * w, 77).unwrap());
            let large = sample_matrix(BandMatrixSpec::new(w, 10 * w, 77).unwrap());
            let a = poly_of_h_at_00(&small, MomentKind::T, 3).unwrap();
            let b = poly_of_h_at_00(&large, MomentKind::T, 3).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            let a = moments_at_00(&small, MomentKind::U, 3).unwrap();
            let b = moments_at_00(&large, MomentKind::U, 3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_small_truncation() {
        let m = sample_matrix(BandMatrixSpec::new(2, 5, 0).unwrap());
        assert!(matches!(
            poly_of_h_at_00(&m, MomentKind::T, 3),
            Err(Error::TruncationTooSmall { required: 6, .. })
        ));
    }

    #[test]
    fn estimates_are_reproducible_and_centered() {
        let spec = BandMatrixSpec::new(2, 16, 5).unwrap();
        let a = estimate_moments(&spec, MomentKind::T, 8, 2000).unwrap();
        let b = estimate_moments(&spec, MomentKind::T, 8, 2000).unwrap();
        assert_eq!(a, b);
        // exact <T_2> = -(W-1)/(2W-1)
        assert!((a.values[2] + 1.0 / 3.0).abs() <= 4.0 * a.std_errors[2] + 1e-12);
        for n in [1usize, 3, 5, 7] {
            assert!(a.values[n].abs() <= 4.0 * a.std_errors[n] + 1e-12, "n={n}");
        }
        let u = estimate_moments(&spec, MomentKind::UnW, 2, 500).unwrap();
        assert!(u.values[2].abs() <= 4.0 * u.std_errors[2] + 1e-12);
    }

    #[test]
    fn zero_samples_rejected() {
        let spec = BandMatrixSpec::new(2, 16, 5).unwrap();
        assert!(estimate_moments(&spec, MomentKind::T, 2, 0).is_err());
    }
}
