//! `S_ε(z) = Σ_{n>=1} φ_q(nε) z^{n-1}`, its derivatives and divided
//! differences.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use super::divided::complete_homogeneous;
use super::fourier::fourier_q;
use super::{KernelParams, PhiTable, NEGLIGIBLE};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMethod {
    /// Power series with the tabulated kernel.
    Direct,
    /// Fourier representation along the rays `arg ξ ∈ {φ, π - φ}`.
    Contour,
}

fn check_point(params: &KernelParams, z: Complex64) -> Result<()> {
    if !(z.norm() <= 1.0 + 1e-12) {
        return Err(invalid("z", "must lie in the closed unit disc"));
    }
    let gap = (Complex64::new(1.0, 0.0) - z).norm();
    if gap < params.singularity_floor() {
        return Err(Error::NearSingularity(gap));
    }
    Ok(())
}

/// `m (m-1) ... (m-j+1)`.
fn falling(m: usize, j: usize) -> f64 {
    ((m + 1 - j)..=m).map(|k| k as f64).product()
}

/// `S_ε^{(j)}(z)` by the power series with a prepared kernel table.
pub fn s_eps_with(params: &KernelParams, table: &PhiTable, z: Complex64, j: usize) -> Result<Complex64> {
    check_point(params, z)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for n in (j + 1)..=table.n_max() {
        sum += table.get(n) * falling(n - 1, j) * power;
        power *= z;
    }
    Ok(sum)
}

/// `S_ε^{(j)}(z)` for `|z| <= 1`, `z` away from 1.
pub fn s_eps(params: &KernelParams, z: Complex64, j: usize) -> Result<Complex64> {
    s_eps_with(params, &PhiTable::new(params)?, z, j)
}

/// `S_ε[z₁..z_E] = Σ_{n>=E} φ_q(nε) h_{n-E}(z)`; finite at coincident points.
pub fn s_eps_divided(table: &PhiTable, z: &[Complex64]) -> Result<Complex64> {
    if z.is_empty() {
        return Err(invalid("z", "need at least one point"));
    }
    let e = z.len();
    let n_max = table.n_max();
    if n_max < e {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = complete_homogeneous(z, n_max - e);
    Ok((e..=n_max).map(|n| table.get(n) * h[n - e]).sum())
}

/// Cached `F_q²` on the ray `arg ξ = π/(8q)` at two quadrature resolutions.
#[derive(Debug, Clone)]
pub struct RayContour {
    params: KernelParams,
    direction: Complex64,
    coarse: Vec<(f64, f64, Complex64)>,
    fine: Vec<(f64, f64, Complex64)>,
}

const RAY_RULE: usize = 20;

fn panel_edges(reach: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = (1..=16).map(|k| reach * 0.5f64.powi(k)).collect();
    edges.extend((0..=32).map(|i| reach * f64::from(i) / 32.0));
    edges.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * reach);
    edges
}

fn nodes(edges: &[f64], split: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(RAY_RULE).expect("nonzero"));
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / split as f64;
        for s in 0..split {
            let lo = w[0] + h * s as f64;
            for &(x, wt) in rule.as_node_weight_pairs() {
                out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * wt));
            }
        }
    }
    out
}

impl RayContour {
    pub fn new(params: &KernelParams) -> Result<Self> {
        let q = params.q();
        let tol = params.tolerance();
        let angle = PI / (8.0 * f64::from(q));
        let direction = Complex64::from_polar(1.0, angle);
        let f0 = fourier_q(q, Complex64::new(0.0, 0.0), tol)?.norm_sqr();
        let mut reach = 0.0;
        let mut quiet = 0;
        while quiet < 8 {
            reach += 0.125;
            let f = fourier_q(q, direction * reach, tol)?.norm_sqr();
            if f < NEGLIGIBLE * 1e-2 * f0 {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if reach > 200.0 {
                return Err(Error::NonConvergence("F_q does not decay along the ray".into()));
            }
        }
        let edges = panel_edges(reach);
        let tabulate = |pts: Vec<(f64, f64)>| -> Result<Vec<(f64, f64, Complex64)>> {
            pts.into_iter()
                .map(|(r, w)| {
                    let f = fourier_q(q, direction * r, tol)?;
                    Ok((r, w, f * f))
                })
                .collect()
        };
        Ok(Self {
            params: *params,
            direction,
            coarse: tabulate(nodes(&edges, 1))?,
            fine: tabulate(nodes(&edges, 2))?,
        })
    }

    fn integrate(&self, pts: &[(f64, f64, Complex64)], z: Complex64, j: usize, eps: f64) -> (Complex64, f64) {
        let d = self.direction;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for &(r, w, f2) in pts {
            for (xi, f2x, dxi) in [(d * r, f2, d), (-d.conj() * r, f2.conj(), d.conj())] {
                let phase = (2.0 * PI * Complex64::i() * eps * xi).exp();
                let ratio = phase / (Complex64::new(1.0, 0.0) - z * phase);
                let term = f2x * ratio.powi(j as i32 + 1) * dxi;
                acc += w * term;
                mass += w * term.norm();
            }
        }
        (acc, mass)
    }

    /// `S_ε^{(j)}(z) = j!/A_q ∫_L F_q(ξ)² [e^{2πiεξ} / (1 - z e^{2πiεξ})]^{j+1} dξ`.
    pub fn derivative(&self, z: Complex64, j: usize) -> Result<Complex64> {
        check_point(&self.params, z)?;
        let eps = self.params.epsilon();
        let (coarse, _) = self.integrate(&self.coarse, z, j, eps);
        let (fine, mass) = self.integrate(&self.fine, z, j, eps);
        let tol = self.params.tolerance().max(1e-13);
        if (fine - coarse).norm() > tol * 1e3 * fine.norm().max(mass * 1e-3) {
            return Err(Error::NonConvergence(format!(
                "ray quadrature for S_eps unresolved at z = {z}, j = {j}"
            )));
        }
        let fact: f64 = (1..=j).map(|k| k as f64).product();
        Ok(fine * fact / self.params.normalization())
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: u32, eps: f64) -> KernelParams {
        KernelParams::new(q, eps, 0.5).unwrap()
    }

    #[test]
    fn value_at_origin() {
        let p = params(2, 0.1);
        let v = s_eps(&p, Complex64::new(0.0, 0.0), 0).unwrap();
        assert!((v.re - super::super::phi_q(&p, 0.1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn alternating_sum() {
        let p = params(2, 0.1);
        let t = PhiTable::new(&p).unwrap();
        let want: f64 = (1..=t.n_max())
            .map(|n| t.get(n) * if n % 2 == 1 { 1.0 } else { -1.0 })
            .sum();
        let got = s_eps(&p, Complex64::new(-1.0, 0.0), 0).unwrap();
        assert!((got.re - want).abs() < 1e-9);
        let ray = RayContour::new(&p).unwrap();
        let c = ray.derivative(Complex64::new(-1.0, 0.0), 0).unwrap();
        assert!((c - got).norm() < 1e-9, "{c} {got}");
    }

    #[test]
    fn contour_matches_series() {
        for &(q, eps) in &[(1u32, 0.2), (2, 0.05)] {
            let p = params(q, eps);
            let t = PhiTable::new(&p).unwrap();
            let ray = RayContour::new(&p).unwrap();
            for &z in &[
                Complex64::new(0.3, 0.2),
                Complex64::from_polar(1.0, 0.5),
                Complex64::from_polar(1.0, 2.5),
                Complex64::new(-0.6, -0.1),
            ] {
                for j in 0..=3 {
                    let a = s_eps_with(&p, &t, z, j).unwrap();
                    let b = ray.derivative(z, j).unwrap();
                    assert!((a - b).norm() < 1e-8 * a.norm().max(1.0), "q={q} z={z} j={j} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn rejects_points_near_one_and_outside() {
        let p = params(2, 0.1);
        assert!(matches!(s_eps(&p, Complex64::new(1.0, 0.0), 0), Err(Error::NearSingularity(_))));
        assert!(s_eps(&p, Complex64::new(1.1, 0.0), 0).is_err());
    }

    #[test]
    fn divided_difference_matches_generic_route() {
        let p = params(2, 0.1);
        let t = PhiTable::new(&p).unwrap();
        let z = [Complex64::new(0.2, 0.5), Complex64::new(-0.4, 0.1), Complex64::new(0.7, -0.3)];
        let values: Vec<_> = z.iter().map(|&x| (x, s_eps_with(&p, &t, x, 0).unwrap())).collect();
        let generic = super::super::divided_difference(&values, 1e-12).unwrap();
        let series = s_eps_divided(&t, &z).unwrap();
        assert!((generic - series).norm() < 1e-10);
    }

    #[test]
    fn confluent_divided_difference_is_scaled_derivative() {
        let p = params(2, 0.1);
        let t = PhiTable::new(&p).unwrap();
        let z = Complex64::new(0.3, -0.4);
        let dd = s_eps_divided(&t, &[z, z, z]).unwrap();
        let d2 = s_eps_with(&p, &t, z, 2).unwrap() / 2.0;
        assert!((dd - d2).norm() < 1e-10);
    }

    #[test]
    fn mean_value_on_real_points() {
        let p = params(2, 0.05);
        let t = PhiTable::new(&p).unwrap();
        let pts = [[-0.9, 0.2, 0.0, 0.0], [-0.3, 0.5, 0.8, 0.0], [-1.0, -0.2, 0.4, 0.9]];
        for (k, row) in pts.iter().enumerate() {
            let e = k + 2;
            let z: Vec<Complex64> = row[..e].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let dd = s_eps_divided(&t, &z).unwrap().re;
            let (lo, hi) = (row[..e].iter().cloned().fold(f64::INFINITY, f64::min), row[..e].iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            let fact: f64 = (1..e).map(|k| k as f64).product();
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..=2000 {
                let x = lo + (hi - lo) * f64::from(i) / 2000.0;
                let v = s_eps_with(&p, &t, Complex64::new(x, 0.0), e - 1).unwrap().re / fact;
                mn = mn.min(v);
                mx = mx.max(v);
            }
            assert!(dd >= mn - 1e-9 && dd <= mx + 1e-9, "E={e} {dd} not in [{mn}, {mx}]");
        }
    }

    #[test]
    fn derivative_bound_constant_is_stable_in_epsilon() {
        let mut fitted = Vec::new();
        for &eps in &[0.01, 0.05, 0.2] {
            let p = params(2, eps);
            let t = PhiTable::new(&p).unwrap();
            let mut c: f64 = 0.0;
            for j in 0..=3 {
                let fact: f64 = (1..=j).map(|k| k as f64).product();
                for a in 1..=64 {
                    for &r in &[0.0, 0.5, 0.9, 0.99, 1.0] {
                        let z = Complex64::from_polar(r, 2.0 * PI * f64::from(a) / 65.0);
                        let s = s_eps_with(&p, &t, z, j).unwrap().norm() / fact;
                        let gap = (Complex64::new(1.0, 0.0) - z).norm();
                        c = c.max(gap * s.powf(1.0 / (j as f64 + 1.0)));
                    }
                }
            }
            fitted.push(c);
        }
        let (lo, hi) = (fitted.iter().cloned().fold(f64::INFINITY, f64::min), fitted.iter().cloned().fold(0.0, f64::max));
        assert!(hi < 10.0 && hi / lo < 3.0, "{fitted:?}");
    }
}
