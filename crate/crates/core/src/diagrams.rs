//! Pairings of closed paths, contraction to diagrams, genus and the simple
//! predicate.
//!
//! A diagram is a multigraph with a marked vertex together with a closed
//! traversal passing every edge exactly twice. Vertex 0 is always the marked
//! vertex.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::path_oracle::{closed_paths, EnumerationCap, LatticePath, PathKind};

/// Fixed-point-free involution on the steps of a closed path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    partner: Vec<usize>,
}

impl Pairing {
    pub fn new(partner: Vec<usize>) -> Result<Self> {
        for (j, &p) in partner.iter().enumerate() {
            if p >= partner.len() || p == j || partner[p] != j {
                return Err(invalid("pairing", format!("step {j} is not matched involutively")));
            }
        }
        Ok(Self { partner })
    }

    pub fn partner(&self, j: usize) -> usize {
        self.partner[j]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// Whether every pair traverses one unordered edge of `path`.
    pub fn is_valid_for(&self, path: &LatticePath) -> bool {
        self.partner.len() == path.len() && (0..self.partner.len()).all(|j| path.edge(j) == path.edge(self.partner[j]))
    }
}

/// All perfect matchings of `items`, as lists of pairs.
fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|&(i, _)| i + 1 != k).map(|(_, &x)| x).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}

/// Every pairing of a closed path with even edge multiplicities.
pub fn enumerate_pairings(path: &LatticePath) -> Result<Vec<Pairing>> {
    if !path.is_closed() {
        return Err(invalid("path", "path must be closed"));
    }
    let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for j in 0..path.len() {
        groups.entry(path.edge(j)).or_default().push(j);
    }
    if groups.values().any(|g| g.len() % 2 == 1) {
        return Err(Error::OddMultiplicity);
    }
    let mut partials = vec![vec![usize::MAX; path.len()]];
    for steps in groups.values() {
        let options = matchings(steps);
        let mut next = Vec::with_capacity(partials.len() * options.len());
        for p in &partials {
            for m in &options {
                let mut q = p.clone();
                for &(a, b) in m {
                    q[a] = b;
                    q[b] = a;
                }
                next.push(q);
            }
        }
        partials = next;
    }
    Ok(partials.into_iter().map(|partner| Pairing { partner }).collect())
}

/// One traversal step: an edge label crossed from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Step {
    from: usize,
    to: usize,
    edge: usize,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Multigraph with marked vertex 0; loops allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Multigraph {
    pub vertex_count: usize,
    /// Oriented edges `(tail, head)`.
    pub edges: Vec<(usize, usize)>,
}

impl Multigraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(invalid("vertex_count", "a multigraph needs the marked vertex"));
        }
        if edges.iter().any(|&(a, b)| a >= vertex_count || b >= vertex_count) {
            return Err(invalid("edges", "endpoint out of range"));
        }
        Ok(Self { vertex_count, edges })
    }

    /// One vertex, one loop.
    pub fn loop_graph() -> Self {
        Self {
            vertex_count: 1,
            edges: vec![(0, 0)],
        }
    }

    /// Two vertices joined by three parallel edges.
    pub fn theta_graph() -> Self {
        Self {
            vertex_count: 2,
            edges: vec![(0, 1), (0, 1), (0, 1)],
        }
    }

    pub fn genus(&self) -> i64 {
        self.edges.len() as i64 - self.vertex_count as i64 + 1
    }

    /// Degrees with loops counted twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        for &(a, b) in &self.edges {
            union(&mut parent, a, b);
        }
        (0..self.vertex_count).all(|v| find(&mut parent, v) == find(&mut parent, 0))
    }

    /// Canonical unordered edge list, minimal over relabelings that fix
    /// vertex 0.
    pub fn canonical_form(&self) -> (usize, Vec<(usize, usize)>) {
        let others: Vec<usize> = (1..self.vertex_count).collect();
        let mut best: Option<Vec<(usize, usize)>> = None;
        let mut perm = others.clone();
        loop {
            let mut label = vec![0; self.vertex_count];
            for (slot, &v) in perm.iter().enumerate() {
                label[v] = slot + 1;
            }
            let mut edges: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (label[a], label[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            edges.sort_unstable();
            if best.as_ref().is_none_or(|b| edges < *b) {
                best = Some(edges);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        (self.vertex_count, best.unwrap_or_default())
    }

    pub fn is_isomorphic(&self, other: &Multigraph) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Contracted (path, pairing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    graph: Multigraph,
    /// `(edge index, forward)` in traversal order, starting at the marked vertex.
    traversal: Vec<(usize, bool)>,
    order: usize,
}

impl Diagram {
    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn traversal(&self) -> &[(usize, bool)] {
        &self.traversal
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edges.len()
    }

    /// Vertex sequence of the traversal, closed.
    pub fn traversal_vertices(&self) -> Vec<usize> {
        let mut out = vec![0];
        for &(e, fwd) in &self.traversal {
            let (a, b) = self.graph.edges[e];
            out.push(if fwd { b } else { a });
        }
        out
    }

    /// Whether the traversal is closed, starts at the marked vertex and
    /// crosses every edge exactly twice.
    pub fn traversal_is_valid(&self) -> bool {
        let mut count = vec![0usize; self.graph.edges.len()];
        let mut at = 0;
        for &(e, fwd) in &self.traversal {
            let (a, b) = self.graph.edges[e];
            let (from, to) = if fwd { (a, b) } else { (b, a) };
            if from != at {
                return false;
            }
            at = to;
            count[e] += 1;
        }
        at == 0 && count.iter().all(|&c| c == 2)
    }
}

fn contract_steps(mut steps: Vec<Step>, marked: usize, order: usize) -> Diagram {
    let mut next_edge = steps.iter().map(|s| s.edge).max().map_or(0, |m| m + 1);
    'scan: loop {
        let len = steps.len();
        for i in 0..len.saturating_sub(1) {
            let (a, b) = (steps[i], steps[i + 1]);
            if a.edge == b.edge || a.to == marked || steps.iter().filter(|s| s.from == a.to).count() != 2 {
                continue;
            }
            let pa = (0..len).find(|&k| k != i && steps[k].edge == a.edge).expect("paired");
            let pb = (0..len).find(|&k| k != i + 1 && steps[k].edge == b.edge).expect("paired");
            let merged_other = if pb == pa + 1 && steps[pa].to == a.to {
                Step {
                    from: steps[pa].from,
                    to: steps[pb].to,
                    edge: next_edge,
                }
            } else if pa == pb + 1 && steps[pb].to == a.to {
                Step {
                    from: steps[pb].from,
                    to: steps[pa].to,
                    edge: next_edge,
                }
            } else {
                continue;
            };
            let lo = pa.min(pb);
            let merged = Step {
                from: a.from,
                to: b.to,
                edge: next_edge,
            };
            next_edge += 1;
            let mut out = Vec::with_capacity(len - 2);
            let mut k = 0;
            while k < len {
                if k == i {
                    out.push(merged);
                    k += 2;
                } else if k == lo {
                    out.push(merged_other);
                    k += 2;
                } else {
                    out.push(steps[k]);
                    k += 1;
                }
            }
            steps = out;
            continue 'scan;
        }
        break;
    }
    // relabel vertices: marked first, then order of appearance
    let mut vlabel: HashMap<usize, usize> = HashMap::new();
    vlabel.insert(marked, 0);
    let mut elabel: HashMap<usize, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut traversal = Vec::with_capacity(steps.len());
    for s in &steps {
        for v in [s.from, s.to] {
            let n = vlabel.len();
            vlabel.entry(v).or_insert(n);
        }
        let (f, t) = (vlabel[&s.from], vlabel[&s.to]);
        match elabel.get(&s.edge) {
            Some(&e) => {
                let (tail, _) = edges[e];
                traversal.push((e, tail == f && (tail != t || traversal.iter().all(|&(x, _)| x != e))));
            }
            None => {
                let e = edges.len();
                elabel.insert(s.edge, e);
                edges.push((f, t));
                traversal.push((e, true));
            }
        }
    }
    Diagram {
        graph: Multigraph {
            vertex_count: vlabel.len(),
            edges,
        },
        traversal,
        order,
    }
}

/// Contracts a closed path with a pairing into a diagram.
///
/// Steps are first glued along the pairing; then consecutive steps `j, j+1`
/// whose partners are consecutive as well are merged into one edge, scanning
/// from the start and restarting after each merge. A merge also requires the
/// shared vertex to be unmarked and visited exactly twice, so only degree-2
/// vertices are suppressed.
pub fn contract(path: &LatticePath, pairing: &Pairing) -> Result<Diagram> {
    if !path.is_closed() || !pairing.is_valid_for(path) {
        return Err(invalid("pairing", "pairing does not match the path"));
    }
    let len = path.len();
    let mut parent: Vec<usize> = (0..len).collect();
    for j in 0..len {
        let p = pairing.partner(j);
        if path.vertices[j] == path.vertices[p] {
            union(&mut parent, j, p);
            union(&mut parent, (j + 1) % len, (p + 1) % len);
        } else {
            union(&mut parent, j, (p + 1) % len);
            union(&mut parent, (j + 1) % len, p);
        }
    }
    let steps: Vec<Step> = (0..len)
        .map(|j| Step {
            from: find(&mut parent, j),
            to: find(&mut parent, (j + 1) % len),
            edge: j.min(pairing.partner(j)),
        })
        .collect();
    let order = path.edge_multiplicities().values().copied().max().unwrap_or(0) / 2;
    let marked = find(&mut parent, 0);
    Ok(contract_steps(steps, marked, order))
}

/// Contracts a diagram's own traversal again.
pub fn recontract(d: &Diagram) -> Diagram {
    let verts = d.traversal_vertices();
    let steps = d
        .traversal
        .iter()
        .enumerate()
        .map(|(k, &(e, _))| Step {
            from: verts[k],
            to: verts[k + 1],
            edge: e,
        })
        .collect();
    contract_steps(steps, 0, d.order)
}

pub fn genus(d: &Diagram) -> i64 {
    d.graph.genus()
}

/// Marked vertex of degree 2, every other vertex of degree 3.
pub fn is_simple(d: &Diagram) -> bool {
    let deg = d.graph.degrees();
    deg[0] == 2 && deg[1..].iter().all(|&x| x == 3)
}

/// One isomorphism class seen in a census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub genus: i64,
    pub simple: bool,
    pub order: usize,
    /// Number of (path, pairing) couples contracting to this class.
    pub multiplicity: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Contracts every pairing of every closed path of even length up to
/// `max_length` and tallies isomorphism classes.
pub fn census(band_width: usize, max_length: usize, kind: PathKind, cap: &EnumerationCap) -> Result<Vec<CensusEntry>> {
    let mut classes: BTreeMap<(usize, Vec<(usize, usize)>, usize), CensusEntry> = BTreeMap::new();
    for n in (2..=max_length).step_by(2) {
        for path in closed_paths(band_width, n, kind, cap)? {
            for pairing in enumerate_pairings(&path)? {
                let d = contract(&path, &pairing)?;
                let (v, edges) = d.graph.canonical_form();
                let entry = classes.entry((v, edges.clone(), d.order)).or_insert_with(|| CensusEntry {
                    vertex_count: v,
                    edge_count: edges.len(),
                    genus: genus(&d),
                    simple: is_simple(&d),
                    order: d.order,
                    multiplicity: 0,
                    edges,
                });
                entry.multiplicity += 1;
            }
        }
    }
    Ok(classes.into_values().collect())
}
