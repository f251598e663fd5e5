//! Averaged resolvent, the semicircle reference, and density-of-states
//! reconstruction from Chebyshev moments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band_model::{truncation_radius_for_degree, BandMatrixSpec, SampledBandMatrix};
use crate::banded::resolvent_at_origin;
use crate::chebyshev::{cheb_t_table, sample_moments, MomentKind, MomentSeries};
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::regularizer::{phi_q, KernelParams, PhiTable};
use crate::rng::sample_seed;
use crate::stats::Estimate;

/// Default truncation tolerance for resolvent runs.
pub const DEFAULT_RESOLVENT_TOL: f64 = 1e-6;
pub const DEFAULT_DECAY_FACTOR: f64 = 4.0;

/// `N = ⌈K W ln(1/tol) / ε⌉`, never below `W`.
pub fn resolvent_truncation_with(band_width: usize, epsilon: f64, tol: f64, decay_factor: f64) -> Result<usize> {
    if band_width == 0 {
        return Err(invalid("W", "must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", "must lie in (0, 1)"));
    }
    if !(decay_factor > 0.0 && decay_factor.is_finite()) {
        return Err(invalid("K", "must be positive and finite"));
    }
    let n = (decay_factor * band_width as f64 * (1.0 / tol).ln() / epsilon).ceil();
    Ok((n as usize).max(band_width))
}

pub fn resolvent_truncation(band_width: usize, epsilon: f64, tol: f64) -> Result<usize> {
    resolvent_truncation_with(band_width, epsilon, tol, DEFAULT_DECAY_FACTOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventQuery {
    pub e0: f64,
    pub epsilon: f64,
    pub band_width: usize,
    pub radius: usize,
    pub samples: usize,
    pub seed: u64,
}

impl ResolventQuery {
    /// Query with the radius set by `resolvent_truncation` at the default
    /// tolerance.
    pub fn new(e0: f64, epsilon: f64, band_width: usize, samples: usize, seed: u64) -> Result<Self> {
        let radius = resolvent_truncation(band_width, epsilon, DEFAULT_RESOLVENT_TOL)?;
        let q = Self {
            e0,
            epsilon,
            band_width,
            radius,
            samples,
            seed,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_radius(mut self, radius: usize) -> Result<Self> {
        self.radius = radius;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !self.e0.is_finite() {
            return Err(invalid("E0", "must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive and finite"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "need at least one sample"));
        }
        BandMatrixSpec::new(self.band_width, self.radius, self.seed).map(|_| ())
    }

    pub fn spec(&self) -> Result<BandMatrixSpec> {
        BandMatrixSpec::new(self.band_width, self.radius, self.seed)
    }
}

/// `Im (H - E₀ - iε)⁻¹(0, 0)` for each sample, in sample order.
pub fn resolvent_im_samples(query: &ResolventQuery) -> Result<Vec<f64>> {
    query.validate()?;
    let spec = query.spec()?;
    let z = Complex64::new(query.e0, query.epsilon);
    (0..query.samples as u64)
        .into_par_iter()
        .map(|i| {
            let m = SampledBandMatrix::sample(spec.with_seed(sample_seed(spec.seed(), i)));
            let im = resolvent_at_origin(&m, z)?.im;
            if !(im > 0.0) {
                return Err(Error::NonConvergence(format!(
                    "sample {i} returned Im G(0,0) = {im}, expected a positive value"
                )));
            }
            Ok(im)
        })
        .collect()
}

pub fn avg_resolvent_im(query: &ResolventQuery) -> Result<Estimate> {
    Ok(Estimate::from_samples(&resolvent_im_samples(query)?))
}

/// `∫ a₀(E) / (E - E₀ - iε) dE` with `a₀(E) = (2/π) sqrt(1 - E²)`, computed
/// in the angle `E = cos θ`.
pub fn semicircle_stieltjes(e0: f64, epsilon: f64) -> Result<Complex64> {
    if !e0.is_finite() {
        return Err(invalid("E0", "must be finite"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    let z = Complex64::new(e0, epsilon);
    let f = |t: f64| {
        let s = t.sin();
        Complex64::new(2.0 / PI * s * s, 0.0) / (Complex64::new(t.cos(), 0.0) - z)
    };
    let tol = 1e-11 / (1.0 + e0.abs() + epsilon);
    let mut cuts = vec![0.0];
    if e0.abs() < 1.0 {
        let peak = e0.acos();
        for c in [peak - 4.0 * epsilon, peak, peak + 4.0 * epsilon] {
            if c > 0.0 && c < PI {
                cuts.push(c);
            }
        }
    }
    cuts.push(PI);
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        total += integrate_adaptive(w[0], w[1], tol, f)?;
    }
    Ok(total)
}

/// Regularized moment sum and the density it represents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// `1 + 2 Σ_{n>=1} φ̃(nε) T_n(E₀) μ_n`.
    pub value: f64,
    /// `value / (π sqrt(1 - E₀²))`.
    pub dos: f64,
    /// Bound on what extending `φ̃` to `φ_q` could add, using
    /// `|μ_n| <= T_n(W / sqrt(2W - 1))`. Infinite when the kernel does not
    /// beat the Chebyshev growth within the tabulated range.
    pub tail_bound: f64,
    pub n_used: usize,
    pub within_tolerance: bool,
}

fn check_energy(e0: f64) -> Result<()> {
    if !(e0.abs() < 1.0) {
        return Err(invalid("E0", "must lie in (-1, 1)"));
    }
    Ok(())
}

/// Number of moments entering the truncated sum at band width `W`.
pub fn moments_needed(params: &KernelParams, band_width: usize) -> Result<usize> {
    let table = PhiTable::new(params)?;
    Ok(params.cutoff_degree(band_width).min(table.n_max()))
}

fn tail_bound(band_width: usize, table: &PhiTable, n_used: usize) -> f64 {
    let w = band_width as f64;
    let growth = (w / (2.0 * w - 1.0).sqrt()).max(1.0).acosh();
    let values = table.values();
    let mut total = 0.0;
    for (n, &p) in values.iter().enumerate().skip(n_used + 1) {
        if p > 0.0 {
            total += 2.0 * (p.ln() + n as f64 * growth).exp();
        }
    }
    // past the table, log-concavity of φ makes term ratios nonincreasing
    let last = values.len() - 1;
    if last >= 1 && values[last] > 0.0 && values[last - 1] > 0.0 {
        let ratio = (values[last] / values[last - 1]) * growth.exp();
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        let last_term = 2.0 * (values[last].ln() + last as f64 * growth).exp();
        total += last_term * ratio / (1.0 - ratio);
    }
    total
}

/// Regularized reconstruction from a `T` moment series.
pub fn dos_from_moments(moments: &MomentSeries, params: &KernelParams, e0: f64) -> Result<ReconstructionResult> {
    if moments.kind != MomentKind::T {
        return Err(invalid("moments", "reconstruction needs a T series"));
    }
    check_energy(e0)?;
    let table = PhiTable::new(params)?;
    let n_used = params.cutoff_degree(moments.band_width).min(table.n_max());
    if moments.max_degree < n_used || moments.values.len() <= n_used {
        return Err(Error::InsufficientDegree {
            required: n_used,
            available: moments.max_degree,
        });
    }
    let t = cheb_t_table(n_used, e0);
    let value = bracket(&moments.values, &table, &t, n_used);
    let tail = tail_bound(moments.band_width, &table, n_used);
    Ok(ReconstructionResult {
        value,
        dos: value / (PI * (1.0 - e0 * e0).sqrt()),
        tail_bound: tail,
        n_used,
        within_tolerance: tail <= params.tolerance(),
    })
}

fn bracket(mu: &[f64], table: &PhiTable, t: &[f64], n_used: usize) -> f64 {
    1.0 + 2.0 * (1..=n_used).map(|n| table.get(n) * t[n] * mu[n]).sum::<f64>()
}

/// `1 + φ_q(2ε)(1 - 2E₀²)`, the leading behaviour of the bracket.
pub fn bracket_leading_term(params: &KernelParams, e0: f64) -> Result<f64> {
    Ok(1.0 + phi_q(params, 2.0 * params.epsilon())? * (1.0 - 2.0 * e0 * e0))
}

/// Bracket with the exact second moment `-(W - 1)/(2W - 1)` and nothing else.
pub fn bracket_second_order(params: &KernelParams, e0: f64, band_width: usize) -> Result<f64> {
    let w = band_width as f64;
    Ok(1.0 - phi_q(params, 2.0 * params.epsilon())? * (2.0 * e0 * e0 - 1.0) * (w - 1.0) / (w - 0.5))
}

/// Measured bracket with its sampling error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketEstimate {
    pub estimate: Estimate,
    pub reconstruction: ReconstructionResult,
    pub radius: usize,
}

/// Monte Carlo bracket: each sample's moments are summed separately so the
/// standard error is that of the bracket itself.
pub fn measured_bracket(
    band_width: usize,
    params: &KernelParams,
    e0: f64,
    samples: usize,
    seed: u64,
) -> Result<BracketEstimate> {
    check_energy(e0)?;
    let n_used = moments_needed(params, band_width)?;
    let radius = truncation_radius_for_degree(n_used, band_width);
    let spec = BandMatrixSpec::new(band_width, radius, seed)?;
    let per_sample = sample_moments(&spec, MomentKind::T, n_used, samples)?;
    let table = PhiTable::new(params)?;
    let t = cheb_t_table(n_used, e0);
    let brackets: Vec<f64> = per_sample.iter().map(|mu| bracket(mu, &table, &t, n_used)).collect();
    let mut values = vec![0.0; n_used + 1];
    let mut std_errors = vec![0.0; n_used + 1];
    let mut column = vec![0.0; samples];
    for n in 0..=n_used {
        for (c, s) in column.iter_mut().zip(&per_sample) {
            *c = s[n];
        }
        let e = Estimate::from_samples(&column);
        values[n] = e.mean;
        std_errors[n] = e.std_error;
    }
    let series = MomentSeries {
        kind: MomentKind::T,
        band_width,
        max_degree: n_used,
        values,
        std_errors,
        sample_count: samples,
    };
    Ok(BracketEstimate {
        estimate: Estimate::from_samples(&brackets),
        reconstruction: dos_from_moments(&series, params, e0)?,
        radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub epsilon: f64,
    /// `1 + 2 Σ e^{-nε} T_n(E₀) μ_n` over the available degrees.
    pub value: f64,
    /// Largest magnitude of any partial sum.
    pub max_partial: f64,
}

/// The exponentially damped series on a fixed moment set, one row per `ε`.
pub fn exp_kernel_divergence_demo(moments: &MomentSeries, e0: f64, epsilons: &[f64]) -> Result<Vec<DivergencePoint>> {
    if moments.kind != MomentKind::T {
        return Err(invalid("moments", "the damped series needs a T series"));
    }
    check_energy(e0)?;
    let t = cheb_t_table(moments.max_degree, e0);
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(invalid("epsilon", "must be positive and finite"));
            }
            let mut partial = 1.0f64;
            let mut max_partial = partial.abs();
            for n in 1..=moments.max_degree {
                partial += 2.0 * (-(n as f64) * eps).exp() * t[n] * moments.values[n];
                max_partial = max_partial.max(partial.abs());
            }
            Ok(DivergencePoint {
                epsilon: eps,
                value: partial,
                max_partial,
            })
        })
        .collect()
}

/// Distance between the averaged `Im G(0, 0)` and the semicircle reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremError {
    pub estimate: Estimate,
    pub reference: f64,
    pub error: f64,
    pub std_error: f64,
    pub radius: usize,
    /// `ε >= W^{-0.99}`.
    pub in_regime: bool,
}

pub fn theorem_error(band_width: usize, e0: f64, epsilon: f64, samples: usize, seed: u64) -> Result<TheoremError> {
    let query = ResolventQuery::new(e0, epsilon, band_width, samples, seed)?;
    theorem_error_for(&query)
}

pub fn theorem_error_for(query: &ResolventQuery) -> Result<TheoremError> {
    let estimate = avg_resolvent_im(query)?;
    let reference = semicircle_stieltjes(query.e0, query.epsilon)?.im;
    Ok(TheoremError {
        estimate,
        reference,
        error: (estimate.mean - reference).abs(),
        std_error: estimate.std_error,
        radius: query.radius,
        in_regime: query.epsilon >= (query.band_width as f64).powf(-0.99),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_oracle::{build_table, exact_t_moment, rational_to_f64, EnumerationCap, MomentRoute};

    fn closed_form(z: Complex64) -> Complex64 {
        let s = (z - 1.0).sqrt() * (z + 1.0).sqrt();
        -2.0 * (z - s)
    }

    #[test]
    fn truncation_monotone() {
        let a = resolvent_truncation(4, 0.1, 1e-6).unwrap();
        assert!(resolvent_truncation(8, 0.1, 1e-6).unwrap() >= a);
        assert!(resolvent_truncation(4, 0.05, 1e-6).unwrap() >= a);
        assert!(resolvent_truncation(4, 0.1, 1e-3).unwrap() < resolvent_truncation(4, 0.1, 1e-9).unwrap());
        assert!(resolvent_truncation(4, 0.0, 1e-6).is_err());
    }

    #[test]
    fn doubling_the_window_is_invisible() {
        let base = ResolventQuery::new(0.3, 0.1, 8, 10, 5).unwrap();
        let doubled = base.with_radius(2 * base.radius).unwrap();
        let a = resolvent_im_samples(&base).unwrap();
        let b = resolvent_im_samples(&doubled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} {y}");
        }
    }

    #[test]
    fn wide_smoothing_is_free_resolvent() {
        let q = ResolventQuery::new(0.0, 100.0, 4, 20, 1).unwrap();
        let e = avg_resolvent_im(&q).unwrap();
        assert!((e.mean * 100.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn energy_reflection() {
        let a = avg_resolvent_im(&ResolventQuery::new(0.4, 0.2, 4, 200, 3).unwrap()).unwrap();
        let b = avg_resolvent_im(&ResolventQuery::new(-0.4, 0.2, 4, 200, 3).unwrap()).unwrap();
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * joint + 1e-12);
    }

    #[test]
    fn semicircle_quadrature_matches_closed_form() {
        for &(e0, eps) in &[(0.0, 0.1), (0.5, 0.01), (-0.7, 0.3), (0.2, 0.001), (1.5, 0.05), (0.0, 100.0)] {
            let q = semicircle_stieltjes(e0, eps).unwrap();
            let c = closed_form(Complex64::new(e0, eps));
            assert!((q - c).norm() < 1e-8 * c.norm(), "{e0} {eps}: {q} {c}");
        }
        assert!(semicircle_stieltjes(0.0, 0.1).unwrap().re.abs() < 1e-12);
    }

    #[test]
    fn semicircle_approaches_density() {
        let vals: Vec<f64> = [0.1, 0.01, 0.001].iter().map(|&e| semicircle_stieltjes(0.0, e).unwrap().im).collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2] && vals[2] < 2.0);
        assert!(2.0 - vals[2] < 0.01);
        let at_half = semicircle_stieltjes(0.5, 0.01).unwrap().im;
        assert!((at_half / (2.0 * 0.75f64.sqrt()) - 1.0).abs() < 0.02);
    }

    fn ideal(extra: usize) -> MomentSeries {
        let mut v = vec![0.0; extra + 1];
        v[0] = 1.0;
        v[2] = -0.5;
        MomentSeries::exact(MomentKind::T, 16, v)
    }

    #[test]
    fn semicircle_moments_give_semicircle() {
        let p = KernelParams::new(2, 1e-4, 0.5).unwrap();
        let n = moments_needed(&p, 16).unwrap();
        for k in 0..9 {
            let e0 = -0.8 + 0.2 * k as f64;
            let r = dos_from_moments(&ideal(n), &p, e0).unwrap();
            let a0 = 2.0 / PI * (1.0 - e0 * e0).sqrt();
            assert!((r.value - 2.0 * (1.0 - e0 * e0)).abs() < 1e-6);
            assert!((r.dos - a0).abs() < 1e-6);
        }
    }

    #[test]
    fn arcsine_baseline() {
        let p = KernelParams::new(2, 0.05, 0.5).unwrap();
        let n = moments_needed(&p, 16).unwrap();
        let mut m = ideal(n);
        m.values[2] = 0.0;
        let r = dos_from_moments(&m, &p, 0.3).unwrap();
        assert!((r.dos - 1.0 / (PI * 0.91f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn short_series_rejected() {
        let p = KernelParams::new(2, 0.05, 0.5).unwrap();
        assert!(matches!(
            dos_from_moments(&ideal(4), &p, 0.3),
            Err(Error::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn exact_second_moment_term() {
        let p = KernelParams::new(2, 0.1, 0.5).unwrap();
        for w in 1..=3usize {
            let table = build_table(w, 2, &EnumerationCap::default()).unwrap();
            let mu2 = rational_to_f64(&exact_t_moment(&table, 2, MomentRoute::Paths).unwrap());
            let e0 = 0.3;
            let n = moments_needed(&p, w).unwrap();
            let mut v = vec![0.0; n.max(2) + 1];
            v[0] = 1.0;
            v[2] = mu2;
            let r = dos_from_moments(&MomentSeries::exact(MomentKind::T, w, v), &p, e0).unwrap();
            let second = bracket_second_order(&p, e0, w).unwrap();
            assert!((r.value - second).abs() < 1e-14);
            assert!((second - bracket_leading_term(&p, e0).unwrap()).abs() <= 1.0 / w as f64);
        }
    }

    #[test]
    fn damped_series_demo() {
        let p = KernelParams::new(2, 1.0, 0.5).unwrap();
        let e0 = 0.3;
        let spec = BandMatrixSpec::new(8, 8 * 200, 11).unwrap();
        let moments = crate::chebyshev::estimate_moments(&spec, MomentKind::T, 200, 40).unwrap();
        let grid = [1.0, 0.5, 0.2, 0.1, 0.05, 0.02];
        let rows = exp_kernel_divergence_demo(&moments, e0, &grid).unwrap();
        let reference = dos_from_moments(&moments, &p, e0).unwrap().value;
        assert!((rows[0].value / reference - 1.0).abs() < 0.2, "{} {reference}", rows[0].value);
        for w in rows.windows(2) {
            assert!(w[1].max_partial >= w[0].max_partial);
        }
        let ideal_rows = exp_kernel_divergence_demo(&ideal(10), e0, &grid).unwrap();
        assert!(ideal_rows.iter().all(|r| r.value.is_finite()));
    }

    #[test]
    fn wide_smoothing_theorem_error_small() {
        let t = theorem_error(4, 0.2, 10.0, 50, 2).unwrap();
        assert!(t.error < 1e-2);
        assert!(t.in_regime);
    }

    #[test]
    fn measured_bracket_near_leading_term() {
        let p = KernelParams::new(2, 0.2, 0.5).unwrap();
        let b = measured_bracket(8, &p, 0.3, 100, 9).unwrap();
        let lead = bracket_leading_term(&p, 0.3).unwrap();
        assert!((b.estimate.mean - lead).abs() < 4.0 * b.estimate.std_error + 10.0 / 8.0);
        assert!((b.estimate.mean - b.reconstruction.value).abs() < 1e-12);
    }
}
