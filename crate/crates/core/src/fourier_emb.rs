//! Fourier-space embedding integrals for small multigraphs.
//!
//! `P` is the simple random walk on `Z(W)`, `P(u, v) = 1/(2W)` for
//! `0 < |u - v| <= W`, with symbol `w(ξ) = W⁻¹ Σ_{j=1}^W cos(2πjξ)`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagrams::Multigraph;
use crate::error::{invalid, Error, Result};
use crate::regularizer::{s_eps_divided, KernelParams, PhiTable};

/// `w(ξ)` by the product form, falling back to the cosine sum where
/// `sin(πξ)` vanishes.
pub fn w_eval(band_width: usize, xi: f64) -> f64 {
    let s = (PI * xi).sin();
    if s.abs() < 1e-6 {
        return w_direct(band_width, xi);
    }
    let w = band_width as f64;
    (PI * w * xi).sin() * (PI * (w + 1.0) * xi).cos() / (w * s)
}

/// `W⁻¹ Σ_{j=1}^W cos(2πjξ)`.
pub fn w_direct(band_width: usize, xi: f64) -> f64 {
    (1..=band_width).map(|j| (2.0 * PI * j as f64 * xi).cos()).sum::<f64>() / band_width as f64
}

/// Largest `c` with `|w(ξ)| <= 1/(1 + cW min(ξ, 1-ξ))` at every grid point
/// `ξ = k/points`, `0 < k < points`, for every listed band width.
pub fn w_bound_constant(band_widths: &[usize], points: usize) -> Result<f64> {
    if band_widths.is_empty() || band_widths.contains(&0) {
        return Err(invalid("W_list", "need a nonempty list of positive band widths"));
    }
    if points < 2 {
        return Err(invalid("points", "need at least two grid points"));
    }
    let per_width: Vec<f64> = band_widths
        .par_iter()
        .map(|&bw| {
            let mut c = f64::INFINITY;
            for k in 1..points {
                let xi = k as f64 / points as f64;
                let m = xi.min(1.0 - xi);
                let a = w_eval(bw, xi).abs();
                if a > 0.0 {
                    c = c.min((1.0 / a - 1.0) / (bw as f64 * m));
                }
            }
            c.max(0.0)
        })
        .collect();
    Ok(per_width.into_iter().fold(f64::INFINITY, f64::min))
}

/// Integer cycle basis of `{ξ : Σ_{e out of u} ξ_e - Σ_{e into u} ξ_e = 0 ∀u}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KirchhoffSubspace {
    pub edges: Vec<(usize, usize)>,
    /// `basis[k][e]`; one fundamental cycle per non-tree edge.
    pub basis: Vec<Vec<i64>>,
    pub vertex_count: usize,
}

impl KirchhoffSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Net outflow at every vertex, loops excluded.
    pub fn residuals(&self, xi: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.vertex_count];
        for (&(a, b), &x) in self.edges.iter().zip(xi) {
            if a != b {
                r[a] += x;
                r[b] -= x;
            }
        }
        r
    }

    /// `ξ = Σ_k θ_k b_k`.
    pub fn point(&self, theta: &[f64]) -> Vec<f64> {
        let mut xi = vec![0.0; self.edges.len()];
        for (b, &t) in self.basis.iter().zip(theta) {
            for (x, &c) in xi.iter_mut().zip(b) {
                *x += c as f64 * t;
            }
        }
        xi
    }
}

/// Fundamental-cycle basis from a breadth-first spanning tree at vertex 0.
pub fn kirchhoff_basis(graph: &Multigraph) -> Result<KirchhoffSubspace> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = graph.vertex_count;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut in_tree = vec![false; graph.edges.len()];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for (e, &(a, b)) in graph.edges.iter().enumerate() {
            let other = if a == v { b } else if b == v { a } else { continue };
            if !seen[other] {
                seen[other] = true;
                parent[other] = Some((e, v));
                in_tree[e] = true;
                queue.push_back(other);
            }
        }
    }
    // signed flow of the tree path x -> root
    let to_root = |mut x: usize| {
        let mut flow = vec![0i64; graph.edges.len()];
        while let Some((e, p)) = parent[x] {
            flow[e] += if graph.edges[e].0 == x { 1 } else { -1 };
            x = p;
        }
        flow
    };
    let mut basis = Vec::new();
    for (e, &(a, b)) in graph.edges.iter().enumerate() {
        if in_tree[e] {
            continue;
        }
        let mut cycle = vec![0i64; graph.edges.len()];
        cycle[e] = 1;
        if a != b {
            for (c, (x, y)) in cycle.iter_mut().zip(to_root(b).into_iter().zip(to_root(a))) {
                *c += x - y;
            }
        }
        basis.push(cycle);
    }
    debug_assert_eq!(basis.len() as i64, graph.genus());
    Ok(KirchhoffSubspace {
        edges: graph.edges.clone(),
        basis,
        vertex_count: n,
    })
}

/// Inputs of `emb_sharp`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbQuery {
    pub graph: Multigraph,
    pub g: Complex64,
    pub params: KernelParams,
    pub band_width: usize,
    /// Initial points per integration axis; doubled until converged.
    pub resolution: usize,
    pub tolerance: f64,
}

impl EmbQuery {
    pub fn new(graph: Multigraph, g: Complex64, params: KernelParams, band_width: usize) -> Self {
        Self {
            graph,
            g,
            params,
            band_width,
            resolution: 64,
            tolerance: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.band_width == 0 {
            return Err(invalid("W", "must be at least 1"));
        }
        if (self.g.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("g", "must lie on the unit circle"));
        }
        let gap = (Complex64::new(1.0, 0.0) - self.g).norm();
        if gap < self.params.singularity_floor() {
            return Err(Error::NearSingularity(gap));
        }
        if self.resolution < 2 || !(self.tolerance > 0.0) {
            return Err(invalid("resolution", "need at least two points and a positive tolerance"));
        }
        let genus = self.graph.genus();
        if genus > 2 {
            return Err(Error::GenusTooLarge { genus: genus as usize, max: 2 });
        }
        Ok(())
    }
}

const MAX_POINTS: [usize; 3] = [1, 1 << 16, 1 << 11];

fn trapezoid(space: &KirchhoffSubspace, table: &PhiTable, g: Complex64, band_width: usize, m: usize) -> Result<Complex64> {
    let gw: Vec<Complex64> = (0..m).map(|k| g * w_eval(band_width, k as f64 / m as f64)).collect();
    let dim = space.dim();
    let edges = space.edges.len();
    let mi = m as i64;
    let eval = |idx: &[i64]| -> Result<Complex64> {
        let z: Vec<Complex64> = (0..edges)
            .map(|e| {
                let s: i64 = space.basis.iter().zip(idx).map(|(b, &i)| b[e] * i).sum();
                gw[s.rem_euclid(mi) as usize]
            })
            .collect();
        Ok(s_eps_divided(table, &z)? * z.iter().product::<Complex64>())
    };
    let total = match dim {
        0 => eval(&[])?,
        1 => {
            let rows: Vec<Complex64> = (0..mi).into_par_iter().map(|i| eval(&[i])).collect::<Result<_>>()?;
            rows.into_iter().sum::<Complex64>() / m as f64
        }
        _ => {
            let rows: Vec<Complex64> = (0..mi)
                .into_par_iter()
                .map(|i| (0..mi).map(|j| eval(&[i, j])).sum::<Result<Complex64>>())
                .collect::<Result<_>>()?;
            rows.into_iter().sum::<Complex64>() / (m * m) as f64
        }
    };
    Ok(total)
}

/// `Emb#(G) = ∫ dδ_Kirch(ξ) S_ε[gw(ξ₁)..gw(ξ_E)] Π_e gw(ξ_e)`, by the periodic
/// trapezoid rule over the cycle coordinates in `[0, 1)^{genus}`.
pub fn emb_sharp(query: &EmbQuery) -> Result<Complex64> {
    query.validate()?;
    let space = kirchhoff_basis(&query.graph)?;
    let table = PhiTable::new(&query.params)?;
    let dim = space.dim();
    if dim == 0 {
        return trapezoid(&space, &table, query.g, query.band_width, 1);
    }
    let mut m = query.resolution;
    let mut prev = trapezoid(&space, &table, query.g, query.band_width, m)?;
    while m < MAX_POINTS[dim] {
        m *= 2;
        let cur = trapezoid(&space, &table, query.g, query.band_width, m)?;
        if (cur - prev).norm() <= query.tolerance * cur.norm().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "embedding integral unresolved at {m} points per axis"
    )))
}

/// `|Emb#|` against the shape `(1/|1-g|)^{E+1} (log W / W)^{E-V+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbBound {
    pub lhs: f64,
    pub rhs_shape: f64,
    /// Same shape with `(1/W)^{E-V+1}` in place of the logarithmic factor.
    pub rhs_shape_without_log: f64,
}

impl EmbBound {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs_shape
    }

    pub fn ratio_without_log(&self) -> f64 {
        self.lhs / self.rhs_shape_without_log
    }
}

pub fn emb_bound_check(query: &EmbQuery) -> Result<EmbBound> {
    let lhs = emb_sharp(query)?.norm();
    let e = query.graph.edges.len() as i32;
    let genus = query.graph.genus() as i32;
    let w = query.band_width as f64;
    let g_factor = (1.0 / (Complex64::new(1.0, 0.0) - query.g).norm()).powi(e + 1);
    Ok(EmbBound {
        lhs,
        rhs_shape: g_factor * (w.ln() / w).powi(genus),
        rhs_shape_without_log: g_factor * w.powi(-genus),
    })
}

/// `P^n(0, ·)` for `n = 0..=n_max`, each indexed by `R + n_max·W`.
pub fn transition_powers(band_width: usize, n_max: usize) -> Vec<Vec<f64>> {
    let w = band_width;
    let radius = n_max * w;
    let dim = 2 * radius + 1;
    let mut cur = vec![0.0; dim];
    cur[radius] = 1.0;
    let mut out = vec![cur.clone()];
    let p = 1.0 / (2 * w) as f64;
    for n in 1..=n_max {
        let reach = (n - 1) * w;
        let mut next = vec![0.0; dim];
        for i in (radius - reach)..=(radius + reach) {
            let v = cur[i] * p;
            if v == 0.0 {
                continue;
            }
            for d in 1..=w {
                next[i - d] += v;
                next[i + d] += v;
            }
        }
        out.push(next.clone());
        cur = next;
    }
    out
}

/// `Σ_{n>=1} φ_q(nε) gⁿ Pⁿ(0, 0)` by repeated application of `P`.
pub fn loop_direct_sum(band_width: usize, g: Complex64, params: &KernelParams) -> Result<Complex64> {
    if band_width == 0 {
        return Err(invalid("W", "must be at least 1"));
    }
    let table = PhiTable::new(params)?;
    let n_max = table.n_max();
    let powers = transition_powers(band_width, n_max);
    let centre = n_max * band_width;
    let mut gn = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, pn) in powers.iter().enumerate().skip(1) {
        gn *= g;
        sum += table.get(n) * gn * pn[centre];
    }
    Ok(sum)
}

/// Non-backtracking walk distribution after `n` steps from 0, indexed by
/// `R + nW`, by dynamic programming over (position, last step).
pub fn nb_walk_distribution(band_width: usize, n: usize) -> Vec<f64> {
    let w = band_width as i64;
    let radius = n as i64 * w;
    let dim = (2 * radius + 1) as usize;
    let steps: Vec<i64> = (-w..=w).filter(|&d| d != 0).collect();
    let mut out = vec![0.0; dim];
    if n == 0 {
        out[radius as usize] = 1.0;
        return out;
    }
    // mass[pos][k]: at pos having just stepped by steps[k]
    let mut mass = vec![vec![0.0; steps.len()]; dim];
    for (k, &d) in steps.iter().enumerate() {
        mass[(radius + d) as usize][k] = 1.0 / steps.len() as f64;
    }
    let forward = 1.0 / (steps.len() - 1) as f64;
    for _ in 1..n {
        let mut next = vec![vec![0.0; steps.len()]; dim];
        for (pos, row) in mass.iter().enumerate() {
            for (k, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for (k2, &d2) in steps.iter().enumerate() {
                    if d2 == -steps[k] {
                        continue;
                    }
                    next[(pos as i64 + d2) as usize][k2] += m * forward;
                }
            }
        }
        mass = next;
    }
    for (pos, row) in mass.iter().enumerate() {
        out[pos] = row.iter().sum();
    }
    out
}

/// The same distribution from `U_{n,W}(WP/sqrt(2W-1))`:
/// `(2W-1)/(2W) · (2W-1)^{-n/2} U_{n,W}(WP/sqrt(2W-1))(0, R)` for `n >= 1`.
pub fn nb_walk_distribution_chebyshev(band_width: usize, n: usize) -> Vec<f64> {
    let w = band_width;
    let radius = n * w;
    let dim = 2 * radius + 1;
    let c = (2 * w - 1) as f64;
    let a = 1.0 / (2.0 * c.sqrt());
    let apply = |x: &[f64]| {
        let mut y = vec![0.0; dim];
        for i in 0..dim {
            if x[i] == 0.0 {
                continue;
            }
            for d in 1..=w {
                if i >= d {
                    y[i - d] += a * x[i];
                }
                if i + d < dim {
                    y[i + d] += a * x[i];
                }
            }
        }
        y
    };
    let mut delta = vec![0.0; dim];
    delta[radius] = 1.0;
    if n == 0 {
        return delta;
    }
    // U_0 = 1, U_1 = 2A, U_{k+1} = 2A U_k - U_{k-1}
    let mut prev = delta.clone();
    let mut cur: Vec<f64> = apply(&delta).into_iter().map(|v| 2.0 * v).collect();
    let mut older = vec![0.0; dim];
    for _ in 1..n {
        let next: Vec<f64> = apply(&cur).iter().zip(&prev).map(|(x, p)| 2.0 * x - p).collect();
        older = prev;
        prev = cur;
        cur = next;
    }
    // cur = U_n, older = U_{n-2} (zero for n = 1)
    if n == 1 {
        older = vec![0.0; dim];
    }
    let scale = (c / (2.0 * w as f64)) * c.powf(-(n as f64) / 2.0);
    cur.iter().zip(&older).map(|(u, v)| scale * (u - v / c)).collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_forms_agree() {
        assert_eq!(w_eval(5, 0.0), 1.0);
        for k in 0..1000 {
            let xi = k as f64 / 1000.0 + 1e-4;
            assert!((w_eval(1, xi) - (2.0 * PI * xi).cos()).abs() < 1e-12);
            for &bw in &[2usize, 7, 64, 256] {
                assert!((w_eval(bw, xi) - w_direct(bw, xi)).abs() < 1e-12, "W={bw} xi={xi}");
            }
        }
    }

    #[test]
    fn bound_constant_properties() {
        let small = w_bound_constant(&[2, 4, 8], 10_000).unwrap();
        let all = w_bound_constant(&[2, 4, 8, 16, 32, 64, 128, 256], 10_000).unwrap();
        assert!(all > 0.0);
        assert!(small >= all);
        for &bw in &[2usize, 8, 256] {
            for k in 1..10_000 {
                let xi = k as f64 / 10_000.0;
                assert!(w_eval(bw, xi).abs() <= 1.0 / (1.0 + all * bw as f64 * xi.min(1.0 - xi)) + 1e-15);
            }
        }
    }

    #[test]
    fn bipartite_band_has_no_bound() {
        // W = 1: |w(1/2)| = 1
        assert_eq!(w_bound_constant(&[1], 1000).unwrap(), 0.0);
    }

    #[test]
    #[ignore = "the bound needs linear decay of 1 - |w| at 0, but the decay is quadratic; see the ledger"]
    fn bound_constant_exceeds_five_hundredths() {
        let ladder: Vec<usize> = (1..=8).map(|k| 1usize << k).collect();
        assert!(w_bound_constant(&ladder, 100_000).unwrap() > 0.05);
    }

    #[test]
    fn kirchhoff_dimensions() {
        let l = kirchhoff_basis(&Multigraph::loop_graph()).unwrap();
        assert_eq!(l.dim(), 1);
        assert_eq!(l.basis, vec![vec![1]]);
        let t = kirchhoff_basis(&Multigraph::theta_graph()).unwrap();
        assert_eq!(t.dim(), 2);
        let tree = Multigraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(kirchhoff_basis(&tree).unwrap().dim(), 0);
        let disc = Multigraph::new(2, vec![(0, 0)]).unwrap();
        assert_eq!(kirchhoff_basis(&disc), Err(Error::Disconnected));
    }

    #[test]
    fn basis_satisfies_constraints() {
        let graphs = [
            Multigraph::theta_graph(),
            Multigraph::new(3, vec![(0, 1), (2, 1), (1, 2), (2, 0)]).unwrap(),
            Multigraph::new(3, vec![(0, 1), (1, 2), (2, 0), (1, 1), (0, 2)]).unwrap(),
        ];
        for g in &graphs {
            let k = kirchhoff_basis(g).unwrap();
            assert_eq!(k.dim() as i64, g.genus());
            for b in &k.basis {
                let xi: Vec<f64> = b.iter().map(|&x| x as f64).collect();
                assert!(k.residuals(&xi).iter().all(|&r| r == 0.0));
            }
        }
    }

    #[test]
    fn transition_powers_sum_to_one() {
        let p = transition_powers(3, 6);
        for row in &p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert!((p[2][18] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn nb_distribution_matches_chebyshev_form() {
        for w in 1..=4 {
            for n in 0..=7 {
                let a = nb_walk_distribution(w, n);
                let b = nb_walk_distribution_chebyshev(w, n);
                assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-12, "W={w} n={n}");
                }
            }
        }
    }

    #[test]
    fn loop_fourier_matches_lattice_sum() {
        for &phase in &[PI / 3.0, 2.0, -2.5] {
            let g = Complex64::from_polar(1.0, phase);
            for q in [1u32, 2] {
                for eps in [0.05, 0.2] {
                    let p = KernelParams::new(q, eps, 0.5).unwrap();
                    let direct = loop_direct_sum(4, g, &p).unwrap();
                    let fourier = emb_sharp(&EmbQuery::new(Multigraph::loop_graph(), g, p, 4)).unwrap();
                    assert!((direct - fourier).norm() < 1e-6, "{direct} {fourier}");
                }
            }
        }
    }

    #[test]
    fn loop_scales_inversely_with_band_width() {
        let g = Complex64::from_polar(1.0, PI / 3.0);
        let p = KernelParams::new(2, 0.05, 0.5).unwrap();
        let scaled: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&w| {
                let b = emb_bound_check(&EmbQuery::new(Multigraph::loop_graph(), g, p.clone(), w)).unwrap();
                assert!((b.rhs_shape_without_log * w as f64 - (1.0 / (1.0 - g).norm()).powi(2)).abs() < 1e-12);
                b.lhs * w as f64
            })
            .collect();
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "{scaled:?}");
    }

    #[test]
    fn growth_near_one_is_controlled() {
        let p = KernelParams::new(2, 0.2, 0.5).unwrap();
        let lhs: Vec<(f64, f64)> = [0.3, 0.1, 0.03]
            .iter()
            .map(|&d| {
                let g = Complex64::from_polar(1.0, d);
                let q = EmbQuery::new(Multigraph::loop_graph(), g, p.clone(), 8);
                ((1.0 - g).norm(), emb_sharp(&q).unwrap().norm())
            })
            .collect();
        for pair in lhs.windows(2) {
            let (d0, a0) = pair[0];
            let (d1, a1) = pair[1];
            assert!(a1 / a0 <= (d0 / d1).powi(2), "{lhs:?}");
        }
    }

    // Σ_R Σ_{n1,n2,n3>=1} φ((n1+n2+n3)ε) g^{n1+n2+n3} Π P^{n_i}(0, R)
    fn theta_lattice_sum(w: usize, g: Complex64, p: &KernelParams) -> Complex64 {
        let table = PhiTable::new(p).unwrap();
        let n_max = table.n_max();
        let powers = transition_powers(w, n_max);
        let dim = powers[0].len();
        let mut total = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            let a: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { powers[n][r] }).collect();
            let mut aa = vec![0.0; n_max + 1];
            for i in 1..=n_max {
                for j in 1..=n_max - i {
                    aa[i + j] += a[i] * a[j];
                }
            }
            for n in 3..=n_max {
                let c: f64 = (1..n).map(|i| a[i] * aa[n - i]).sum();
                total += table.get(n) * g.powu(n as u32) * c;
            }
        }
        total
    }

    #[test]
    fn theta_fourier_matches_lattice_sum() {
        let g = Complex64::from_polar(1.0, 2.0);
        let p = KernelParams::new(2, 0.2, 0.5).unwrap();
        let direct = theta_lattice_sum(8, g, &p);
        let mut q = EmbQuery::new(Multigraph::theta_graph(), g, p, 8);
        q.tolerance = 1e-8;
        let fourier = emb_sharp(&q).unwrap();
        assert!((direct - fourier).norm() < 1e-4 * direct.norm(), "{direct} {fourier}");
    }

    #[test]
    fn relabelling_and_orientation_do_not_matter() {
        let g = Complex64::from_polar(1.0, 1.0);
        let p = KernelParams::new(2, 0.3, 0.5).unwrap();
        let a = Multigraph::new(3, vec![(0, 1), (1, 2), (1, 2), (2, 0)]).unwrap();
        let b = Multigraph::new(3, vec![(2, 0), (1, 2), (2, 1), (1, 0)]).unwrap();
        let mut qa = EmbQuery::new(a, g, p, 2);
        qa.tolerance = 1e-9;
        let mut qb = qa.clone();
        qb.graph = b;
        let x = emb_sharp(&qa).unwrap();
        let y = emb_sharp(&qb).unwrap();
        assert!((x - y).norm() < 1e-9 * x.norm().max(1e-12), "{x} {y}");
    }

    #[test]
    fn query_validation() {
        let p = KernelParams::new(2, 0.2, 0.5).unwrap();
        let mut q = EmbQuery::new(Multigraph::loop_graph(), Complex64::new(2.0, 0.0), p, 4);
        assert!(emb_sharp(&q).is_err());
        q.g = Complex64::new(1.0, 0.0);
        assert!(matches!(emb_sharp(&q), Err(Error::NearSingularity(_))));
        q.g = Complex64::new(-1.0, 0.0);
        q.graph = Multigraph::new(2, vec![(0, 1), (0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(matches!(emb_sharp(&q), Err(Error::GenusTooLarge { .. })));
    }
}
