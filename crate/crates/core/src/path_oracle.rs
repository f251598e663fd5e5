//! Exact enumeration of closed non-backtracking paths on `Z(W)` that traverse
//! every edge an even number of times.
//!
//! `Z(W)` is the graph on the integers with `u ~ v` iff `0 < |u - v| <= W`.
//! A path `u_0, ..., u_n` is non-backtracking when `u_j != u_{j+2}` for
//! `j = 0..n-2`; the strengthened condition adds the wraparound `u_{n-1} != u_1`
//! for closed paths.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `Z(W)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGraphSpec {
    pub band_width: usize,
}

impl LatticeGraphSpec {
    pub fn new(band_width: usize) -> Result<Self> {
        if band_width == 0 {
            return Err(invalid("W", "band width must be at least 1"));
        }
        Ok(Self { band_width })
    }

    pub fn adjacent(&self, u: i64, v: i64) -> bool {
        let d = (u - v).unsigned_abs();
        d > 0 && d <= self.band_width as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    /// `u_j != u_{j+2}` for `0 <= j <= n - 2`.
    Plain,
    /// Plain plus `u_{n-1} != u_1`; closed paths only.
    Strengthened,
}

/// A vertex sequence `u_0, ..., u_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePath {
    pub vertices: Vec<i64>,
}

impl LatticePath {
    pub fn new(vertices: Vec<i64>) -> Self {
        Self { vertices }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }

    /// Unordered edge of step `j`.
    pub fn edge(&self, j: usize) -> (i64, i64) {
        let (a, b) = (self.vertices[j], self.vertices[j + 1]);
        (a.min(b), a.max(b))
    }

    pub fn is_valid(&self, lattice: &LatticeGraphSpec, kind: PathKind) -> bool {
        let v = &self.vertices;
        let n = self.len();
        if !v.windows(2).all(|p| lattice.adjacent(p[0], p[1])) {
            return false;
        }
        if !v.windows(3).all(|p| p[0] != p[2]) {
            return false;
        }
        match kind {
            PathKind::Plain => true,
            PathKind::Strengthened => self.is_closed() && (n < 2 || v[n - 1] != v[1]),
        }
    }

    /// Traversal count of every edge.
    pub fn edge_multiplicities(&self) -> HashMap<(i64, i64), usize> {
        let mut m = HashMap::new();
        for j in 0..self.len() {
            *m.entry(self.edge(j)).or_insert(0) += 1;
        }
        m
    }

    pub fn has_even_multiplicities(&self) -> bool {
        self.edge_multiplicities().values().all(|c| c % 2 == 0)
    }
}

/// Limits on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCap {
    pub max_length: usize,
    pub max_band_width: usize,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        Self {
            max_length: 10,
            max_band_width: 3,
        }
    }
}

impl EnumerationCap {
    fn check(&self, length: usize, band_width: usize) -> Result<()> {
        if length > self.max_length || band_width > self.max_band_width {
            return Err(Error::EnumerationCap {
                length,
                band_width,
                max_length: self.max_length,
                max_band_width: self.max_band_width,
            });
        }
        Ok(())
    }
}

/// Depth-first search state. Edge multiplicities live in a flat array keyed
/// by `(lower endpoint - base) * W + offset - 1`.
struct Dfs<'a, F> {
    w: i64,
    n: usize,
    target: i64,
    kind: PathKind,
    base: i64,
    mult: Vec<u8>,
    odd: usize,
    path: Vec<i64>,
    visit: &'a mut F,
}

impl<F: FnMut(&[i64])> Dfs<'_, F> {
    fn key(&self, a: i64, b: i64) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        ((lo - self.base) * self.w + (hi - lo) - 1) as usize
    }

    fn toggle(&mut self, a: i64, b: i64, add: bool) {
        let k = self.key(a, b);
        if add {
            self.mult[k] += 1;
        } else {
            self.mult[k] -= 1;
        }
        if self.mult[k] % 2 == 1 {
            self.odd += 1;
        } else {
            self.odd -= 1;
        }
    }

    fn step(&mut self) {
        let k = self.path.len() - 1;
        if k == self.n {
            if self.odd == 0 && *self.path.last().unwrap() == self.target {
                (self.visit)(&self.path);
            }
            return;
        }
        let remaining = self.n - k;
        let cur = self.path[k];
        for d in -self.w..=self.w {
            if d == 0 {
                continue;
            }
            let next = cur + d;
            if k >= 1 && next == self.path[k - 1] {
                continue;
            }
            // u_{n-1} != u_1 for strengthened closed paths
            if self.kind == PathKind::Strengthened && k + 1 == self.n - 1 && self.n >= 3 && next == self.path[1] {
                continue;
            }
            let rem_after = remaining - 1;
            if (next - self.target).unsigned_abs() > rem_after as u64 * self.w as u64 {
                continue;
            }
            self.toggle(cur, next, true);
            if self.odd <= rem_after {
                self.path.push(next);
                self.step();
                self.path.pop();
            }
            self.toggle(cur, next, false);
        }
    }
}

fn run_dfs<F: FnMut(&[i64])>(w: usize, n: usize, prefix: &[i64], target: i64, kind: PathKind, visit: &mut F) {
    let w = w as i64;
    let base = prefix[0] - n as i64 * w - 1;
    let span = (2 * n as i64 * w + 3) as usize;
    let mut dfs = Dfs {
        w,
        n,
        target,
        kind,
        base,
        mult: vec![0; span * w as usize],
        odd: 0,
        path: Vec::with_capacity(n + 1),
        visit,
    };
    dfs.path.push(prefix[0]);
    for &v in &prefix[1..] {
        let last = *dfs.path.last().unwrap();
        dfs.toggle(last, v, true);
        dfs.path.push(v);
    }
    dfs.step();
}

fn validate_request(w: usize, n: usize, u0: i64, un: i64, kind: PathKind, cap: &EnumerationCap) -> Result<()> {
    LatticeGraphSpec::new(w)?;
    if kind == PathKind::Strengthened && u0 != un {
        return Err(invalid("un", "strengthened paths must be closed"));
    }
    cap.check(n, w)
}

/// Calls `visit` on every even-multiplicity path of length `n` from `u0` to
/// `un` satisfying `kind`, in lexicographic order of offsets.
pub fn for_each_path<F: FnMut(&[i64])>(
    w: usize,
    n: usize,
    u0: i64,
    un: i64,
    kind: PathKind,
    cap: &EnumerationCap,
    mut visit: F,
) -> Result<()> {
    validate_request(w, n, u0, un, kind, cap)?;
    if n == 0 {
        if u0 == un {
            visit(&[u0]);
        }
        return Ok(());
    }
    run_dfs(w, n, &[u0], un, kind, &mut visit);
    Ok(())
}

/// All closed even-multiplicity paths of length `n` from 0.
pub fn closed_paths(w: usize, n: usize, kind: PathKind, cap: &EnumerationCap) -> Result<Vec<LatticePath>> {
    let mut out = Vec::new();
    for_each_path(w, n, 0, 0, kind, cap, |p| out.push(LatticePath::new(p.to_vec())))?;
    Ok(out)
}

/// Number of even-multiplicity paths of length `n` from `u0` to `un`.
///
/// Negative and zero lengths follow the formal conventions: `Paths_m = 0` for
/// `m < 0`, `Paths_0(u, v) = δ_uv`, and for strengthened closed paths
/// `Paths⁰_0 = 2W - 1`, `Paths⁰_{-1} = 0`.
pub fn count_paths(w: usize, n: i64, u0: i64, un: i64, kind: PathKind, cap: &EnumerationCap) -> Result<BigInt> {
    LatticeGraphSpec::new(w)?;
    if kind == PathKind::Strengthened && u0 != un {
        return Err(invalid("un", "strengthened paths must be closed"));
    }
    if n < 0 {
        return Ok(BigInt::zero());
    }
    if n == 0 {
        return Ok(match kind {
            PathKind::Plain => BigInt::from(u8::from(u0 == un)),
            PathKind::Strengthened => BigInt::from(2 * w - 1),
        });
    }
    let n = n as usize;
    validate_request(w, n, u0, un, kind, cap)?;
    if u0 == un && n % 2 == 1 {
        return Ok(BigInt::zero());
    }
    // fan out over the first step; each branch owns its search state
    let wi = w as i64;
    let firsts: Vec<i64> = (-wi..=wi).filter(|&d| d != 0).map(|d| u0 + d).collect();
    let total: u64 = firsts
        .par_iter()
        .map(|&u1| {
            let mut count = 0u64;
            run_dfs(w, n, &[u0, u1], un, kind, &mut |_| count += 1);
            count
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(BigInt::from(total))
}

/// One row of the identity `Paths_n - (2W-1) Paths_{n-2} = Paths⁰_n - Paths⁰_{n-2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub n: usize,
    pub lhs: BigInt,
    pub rhs: BigInt,
}

/// `Paths_n` and `Paths⁰_n` for `0 <= n <= max_length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCountTable {
    pub band_width: usize,
    pub max_length: usize,
    /// `paths[n] = Paths_n`; zero for odd `n`.
    pub paths: Vec<BigInt>,
    /// `paths0[n] = Paths⁰_n` with the formal `paths0[0] = 2W - 1`.
    pub paths0: Vec<BigInt>,
    /// Formal `Paths⁰_{-1} = 0`.
    pub paths0_minus1: BigInt,
}

/// Counts closed paths from 0 for every length up to `max_length`.
pub fn build_table(w: usize, max_length: usize, cap: &EnumerationCap) -> Result<PathCountTable> {
    if max_length % 2 == 1 {
        return Err(invalid("max_length", "must be even"));
    }
    cap.check(max_length, w)?;
    let mut paths = Vec::with_capacity(max_length + 1);
    let mut paths0 = Vec::with_capacity(max_length + 1);
    for n in 0..=max_length as i64 {
        paths.push(count_paths(w, n, 0, 0, PathKind::Plain, cap)?);
        paths0.push(count_paths(w, n, 0, 0, PathKind::Strengthened, cap)?);
    }
    Ok(PathCountTable {
        band_width: w,
        max_length,
        paths,
        paths0,
        paths0_minus1: BigInt::zero(),
    })
}

impl PathCountTable {
    /// `Paths_m`, zero for negative `m`.
    pub fn paths_at(&self, m: i64) -> BigInt {
        if m < 0 {
            BigInt::zero()
        } else {
            self.paths[m as usize].clone()
        }
    }

    /// `Paths⁰_m` with the formal values at `m = 0, -1`.
    pub fn paths0_at(&self, m: i64) -> BigInt {
        match m {
            -1 => self.paths0_minus1.clone(),
            m if m < -1 => BigInt::zero(),
            m => self.paths0[m as usize].clone(),
        }
    }

    pub fn identity_rows(&self) -> Vec<IdentityRow> {
        let c = BigInt::from(2 * self.band_width - 1);
        (1..=self.max_length)
            .map(|n| {
                let m = n as i64;
                IdentityRow {
                    n,
                    lhs: self.paths_at(m) - &c * self.paths_at(m - 2),
                    rhs: self.paths0_at(m) - self.paths0_at(m - 2),
                }
            })
            .collect()
    }

    /// Rows where the identity fails; empty when it holds throughout.
    pub fn identity_violations(&self) -> Vec<IdentityRow> {
        self.identity_rows().into_iter().filter(|r| r.lhs != r.rhs).collect()
    }

    /// `(W, n, Paths_n, Paths⁰_n)` for export.
    pub fn rows(&self) -> Vec<(usize, usize, BigInt, BigInt)> {
        (0..=self.max_length)
            .map(|n| (self.band_width, n, self.paths[n].clone(), self.paths0[n].clone()))
            .collect()
    }
}

/// How `exact_t_moment` evaluates the bracketed differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentRoute {
    /// `Paths_{k} - (2W-1) Paths_{k-2}` directly.
    Paths,
    /// Rewritten as `Paths⁰_k - Paths⁰_{k-2}` wherever `k >= 1`.
    Strengthened,
}

/// Exact `<T_n(H)(0, 0)>` from the path counts:
/// `(2(2W-1)^{n/2})^{-1} Σ_{m=0}^{n/2} {Paths_{n-2m} - (2W-1) Paths_{n-2m-2}}`
/// for even `n >= 2`; 1 at `n = 0`, 0 for odd `n`.
pub fn exact_t_moment(table: &PathCountTable, n: usize, route: MomentRoute) -> Result<BigRational> {
    if n > table.max_length {
        return Err(Error::OutOfRange {
            index: n as i64,
            max: table.max_length as i64,
        });
    }
    if n == 0 {
        return Ok(BigRational::one());
    }
    if n % 2 == 1 {
        return Ok(BigRational::zero());
    }
    let c = BigInt::from(2 * table.band_width - 1);
    let mut sum = BigInt::zero();
    for m in 0..=(n / 2) {
        let k = (n - 2 * m) as i64;
        let bracket = match route {
            MomentRoute::Strengthened if k >= 1 => table.paths0_at(k) - table.paths0_at(k - 2),
            _ => table.paths_at(k) - &c * table.paths_at(k - 2),
        };
        sum += bracket;
    }
    let denom = BigInt::from(2) * num_traits::pow(c, n / 2);
    Ok(BigRational::new(sum, denom))
}

/// Exact `<U_{n,W}(H)(0, 0)> = (2W-1)^{-n/2} Paths_n` as a float.
pub fn exact_unw_moment(table: &PathCountTable, n: usize) -> Result<f64> {
    if n > table.max_length {
        return Err(Error::OutOfRange {
            index: n as i64,
            max: table.max_length as i64,
        });
    }
    let p: f64 = table.paths[n].to_string().parse().expect("integer formats as float");
    Ok(p / ((2 * table.band_width - 1) as f64).powf(n as f64 / 2.0))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
    n / d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap() -> EnumerationCap {
        EnumerationCap::default()
    }

    /// Unpruned enumeration of all walks, filtered afterwards.
    fn brute_force(w: usize, n: usize, u0: i64, un: i64, kind: PathKind) -> u64 {
        let lattice = LatticeGraphSpec::new(w).unwrap();
        let wi = w as i64;
        let mut count = 0;
        let mut stack = vec![vec![u0]];
        while let Some(p) = stack.pop() {
            if p.len() == n + 1 {
                let path = LatticePath::new(p);
                if *path.vertices.last().unwrap() == un
                    && path.is_valid(&lattice, kind)
                    && path.has_even_multiplicities()
                {
                    count += 1;
                }
                continue;
            }
            let cur = *p.last().unwrap();
            for d in (-wi..=wi).filter(|&d| d != 0) {
                let mut q = p.clone();
                q.push(cur + d);
                stack.push(q);
            }
        }
        count
    }

    #[test]
    fn pruned_search_matches_brute_force() {
        for w in 1..=2 {
            for n in 0..=7 {
                for &(u0, un) in &[(0i64, 0i64), (0, 1), (0, 2), (1, -1)] {
                    let fast = count_paths(w, n as i64, u0, un, PathKind::Plain, &cap()).unwrap();
                    assert_eq!(fast, BigInt::from(brute_force(w, n, u0, un, PathKind::Plain)), "W={w} n={n} {u0}->{un}");
                }
                if n >= 1 {
                    let fast = count_paths(w, n as i64, 0, 0, PathKind::Strengthened, &cap()).unwrap();
                    assert_eq!(fast, BigInt::from(brute_force(w, n, 0, 0, PathKind::Strengthened)));
                }
            }
        }
    }

    #[test]
    fn small_counts() {
        for w in 1..=3 {
            assert_eq!(count_paths(w, 0, 0, 0, PathKind::Plain, &cap()).unwrap(), BigInt::one());
            assert_eq!(count_paths(w, 2, 0, 0, PathKind::Plain, &cap()).unwrap(), BigInt::zero());
            assert_eq!(count_paths(w, 4, 0, 0, PathKind::Plain, &cap()).unwrap(), BigInt::zero());
        }
        assert_eq!(count_paths(1, 6, 0, 0, PathKind::Plain, &cap()).unwrap(), BigInt::zero());
        assert!(count_paths(2, 6, 0, 0, PathKind::Plain, &cap()).unwrap() > BigInt::zero());
    }

    #[test]
    fn doubled_triangles_at_length_six() {
        // ordered (a, b), both neighbours of 0 and of each other
        for w in 1..=3i64 {
            let mut triangles = 0;
            for a in -w..=w {
                for b in -w..=w {
                    if a != 0 && b != 0 && a != b && (a - b).abs() <= w {
                        triangles += 1;
                    }
                }
            }
            let got = count_paths(w as usize, 6, 0, 0, PathKind::Plain, &cap()).unwrap();
            assert_eq!(got, BigInt::from(triangles), "W={w}");
        }
    }

    #[test]
    fn formal_values() {
        assert_eq!(count_paths(2, 0, 0, 0, PathKind::Strengthened, &cap()).unwrap(), BigInt::from(3));
        assert_eq!(count_paths(2, -1, 0, 0, PathKind::Strengthened, &cap()).unwrap(), BigInt::zero());
        assert_eq!(count_paths(2, 0, 0, 1, PathKind::Plain, &cap()).unwrap(), BigInt::zero());
        let t = build_table(2, 4, &cap()).unwrap();
        assert_eq!(t.paths0_minus1, BigInt::zero());
        assert_eq!(t.paths0[0], BigInt::from(3));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            count_paths(4, 6, 0, 0, PathKind::Plain, &cap()),
            Err(Error::EnumerationCap { .. })
        ));
        assert!(matches!(
            count_paths(2, 12, 0, 0, PathKind::Plain, &cap()),
            Err(Error::EnumerationCap { .. })
        ));
        let wide = EnumerationCap {
            max_length: 12,
            max_band_width: 4,
        };
        assert!(count_paths(4, 6, 0, 0, PathKind::Plain, &wide).is_ok());
        assert!(build_table(2, 5, &cap()).is_err());
    }

    #[test]
    fn strengthened_requires_closed() {
        assert!(count_paths(2, 4, 0, 1, PathKind::Strengthened, &cap()).is_err());
    }

    #[test]
    fn identity_row_two() {
        for w in 1..=3 {
            let t = build_table(w, 2, &cap()).unwrap();
            let row = &t.identity_rows()[1];
            assert_eq!(row.n, 2);
            assert_eq!(row.lhs, -BigInt::from(2 * w - 1));
            assert_eq!(row.lhs, row.rhs);
        }
    }

    #[test]
    fn translation_invariance() {
        for w in 1..=2 {
            for n in 0..=6 {
                let a = count_paths(w, n, 0, 0, PathKind::Plain, &cap()).unwrap();
                let b = count_paths(w, n, 3, 3, PathKind::Plain, &cap()).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn exact_t2() {
        let t = build_table(2, 2, &cap()).unwrap();
        let v = exact_t_moment(&t, 2, MomentRoute::Paths).unwrap();
        assert_eq!(v, BigRational::new(BigInt::from(-1), BigInt::from(3)));
        let t1 = build_table(1, 2, &cap()).unwrap();
        assert_eq!(exact_t_moment(&t1, 2, MomentRoute::Paths).unwrap(), BigRational::zero());
        assert_eq!(exact_t_moment(&t, 0, MomentRoute::Paths).unwrap(), BigRational::one());
        assert!(exact_t_moment(&t, 4, MomentRoute::Paths).is_err());
    }

    #[test]
    fn both_routes_agree() {
        for w in 1..=3 {
            let t = build_table(w, 8, &cap()).unwrap();
            for n in 0..=8 {
                assert_eq!(
                    exact_t_moment(&t, n, MomentRoute::Paths).unwrap(),
                    exact_t_moment(&t, n, MomentRoute::Strengthened).unwrap()
                );
            }
        }
    }

    #[test]
    fn visitor_yields_valid_paths() {
        let lattice = LatticeGraphSpec::new(2).unwrap();
        let paths = closed_paths(2, 8, PathKind::Strengthened, &cap()).unwrap();
        assert!(!paths.is_empty());
        for p in &paths {
            assert!(p.is_valid(&lattice, PathKind::Strengthened));
            assert!(p.has_even_multiplicities());
        }
        let count = count_paths(2, 8, 0, 0, PathKind::Strengthened, &cap()).unwrap();
        assert_eq!(BigInt::from(paths.len()), count);
    }
}
