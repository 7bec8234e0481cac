//! Primitive gossip matrices and consistent matrix sequences.
//!
//! A primitive matrix is built from pairwise-disjoint neighborhoods (cliques of
//! the allowable graph): every member of a neighborhood `L` moves to the mean
//! of `L`, everybody else keeps its value. Products of primitives over disjoint
//! neighborhoods are again primitive. A trace can be rebuilt either as one
//! primitive per iteration or as one product of primitives per iteration that
//! keeps every virtual gossip.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{IterationRecord, Trace};
use crate::graph::{Graph, Label};
use crate::value::{format_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("({0}, {1}) is not an edge of the allowable graph")]
    NotAnEdge(Label, Label),
    #[error("neighborhood {0:?} is not a clique of the allowable graph")]
    NotAClique(Vec<Label>),
    #[error("a neighborhood needs at least 2 agents, got {0}")]
    TooSmall(usize),
    #[error("label {label} outside 1..={n}")]
    LabelOutOfRange { label: Label, n: usize },
    #[error("neighborhoods overlap at agent {0}")]
    Overlap(Label),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("reconstructed matrices disagree with the simulated state at t = {t}")]
    Inconsistent { t: usize },
}

/// A set of at least two pairwise-adjacent agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Neighborhood(BTreeSet<Label>);

impl Neighborhood {
    pub fn new<I: IntoIterator<Item = Label>>(g: &Graph, labels: I) -> Result<Self, MatrixError> {
        let set: BTreeSet<Label> = labels.into_iter().collect();
        if set.len() < 2 {
            return Err(MatrixError::TooSmall(set.len()));
        }
        for &l in &set {
            if l == 0 || l > g.n() {
                return Err(MatrixError::LabelOutOfRange { label: l, n: g.n() });
            }
        }
        for &a in &set {
            for &b in set.range(a + 1..) {
                if !g.has_edge(a, b) {
                    if set.len() == 2 {
                        return Err(MatrixError::NotAnEdge(a, b));
                    }
                    return Err(MatrixError::NotAClique(set.iter().copied().collect()));
                }
            }
        }
        Ok(Neighborhood(set))
    }

    pub fn pair(g: &Graph, i: Label, j: Label) -> Result<Self, MatrixError> {
        Self::new(g, [i, j])
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, l: Label) -> bool {
        self.0.contains(&l)
    }
}

/// Dense `n x n` rational matrix, plus the neighborhoods that generated it when
/// it is a primitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GossipMatrix {
    n: usize,
    entries: Vec<Rational>,
    neighborhoods: Vec<Neighborhood>,
}

impl GossipMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Rational::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = Rational::one();
        }
        GossipMatrix { n, entries, neighborhoods: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at 1-based `(row, col)`.
    pub fn get(&self, row: Label, col: Label) -> &Rational {
        &self.entries[(row - 1) * self.n + (col - 1)]
    }

    pub fn neighborhoods(&self) -> &[Neighborhood] {
        &self.neighborhoods
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.entries.chunks(self.n)
    }

    pub fn mul(&self, rhs: &GossipMatrix) -> Result<GossipMatrix, MatrixError> {
        if self.n != rhs.n {
            return Err(MatrixError::Dimension(self.n, rhs.n));
        }
        let n = self.n;
        let mut entries = vec![Rational::zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = &self.entries[r * n + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = &rhs.entries[k * n + c];
                    if !b.is_zero() {
                        entries[r * n + c] += a * b;
                    }
                }
            }
        }
        let mut neighborhoods = self.neighborhoods.clone();
        neighborhoods.extend(rhs.neighborhoods.iter().cloned());
        Ok(GossipMatrix { n, entries, neighborhoods })
    }

    pub fn apply(&self, x: &[Rational]) -> Result<Vec<Rational>, MatrixError> {
        if x.len() != self.n {
            return Err(MatrixError::Dimension(self.n, x.len()));
        }
        Ok(self
            .rows()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(Rational::zero(), |acc, (a, v)| acc + a * v)
            })
            .collect())
    }

    /// `self * P_L` in place: columns in `L` are replaced by their mean.
    pub fn mul_primitive_right(&mut self, l: &Neighborhood) {
        let n = self.n;
        let w = Rational::new(1.into(), l.len().into());
        for r in 0..n {
            let row = &mut self.entries[r * n..(r + 1) * n];
            let mean: Rational = l.labels().map(|c| &row[c - 1]).sum::<Rational>() * &w;
            for c in l.labels() {
                row[c - 1] = mean.clone();
            }
        }
        self.neighborhoods.push(l.clone());
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let n = self.n;
        let one = Rational::one();
        let nonneg = self.entries.iter().all(|e| *e >= Rational::zero());
        let rows = self.rows().all(|row| row.iter().sum::<Rational>() == one);
        let cols = (0..n).all(|c| (0..n).map(|r| &self.entries[r * n + c]).sum::<Rational>() == one);
        nonneg && rows && cols
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|r| (0..r).all(|c| self.entries[r * n + c] == self.entries[c * n + r]))
    }

    /// Spanning subgraph of `g` whose edges join two members of one generating
    /// neighborhood.
    pub fn induced_graph(&self, g: &Graph) -> Graph {
        let edges = g.edges().filter(|&(a, b)| {
            self.neighborhoods.iter().any(|l| l.contains(a) && l.contains(b))
        });
        Graph::new(g.n(), edges.collect::<Vec<_>>()).expect("subset of a valid graph")
    }

    /// JSON dump: array of rows, each an array of `"num/den"` strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows()
                .map(|row| {
                    serde_json::Value::Array(
                        row.iter().map(|e| serde_json::Value::String(format_rational(e))).collect(),
                    )
                })
                .collect(),
        )
    }
}

/// `P_ij`: agents `i` and `j` average, everyone else holds.
pub fn single_primitive(g: &Graph, i: Label, j: Label) -> Result<GossipMatrix, MatrixError> {
    generalized_primitive(g, &Neighborhood::pair(g, i, j)?)
}

/// `P_L`: every member of `L` moves to the mean of `L`.
pub fn generalized_primitive(g: &Graph, l: &Neighborhood) -> Result<GossipMatrix, MatrixError> {
    multi_primitive(g, std::slice::from_ref(l))
}

/// Primitive for a multi-gossip over pairwise disjoint neighborhoods, written
/// in closed form (block averaging).
pub fn multi_primitive(g: &Graph, parts: &[Neighborhood]) -> Result<GossipMatrix, MatrixError> {
    let n = g.n();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (idx, part) in parts.iter().enumerate() {
        for l in part.labels() {
            if l > n {
                return Err(MatrixError::LabelOutOfRange { label: l, n });
            }
            if owner[l - 1].replace(idx).is_some() {
                return Err(MatrixError::Overlap(l));
            }
        }
    }
    let mut m = GossipMatrix::identity(n);
    for part in parts {
        let w = Rational::new(1.into(), part.len().into());
        for a in part.labels() {
            for b in part.labels() {
                m.entries[(a - 1) * n + (b - 1)] = w.clone();
            }
        }
    }
    m.neighborhoods = parts.to_vec();
    Ok(m)
}

/// One primitive per iteration, each tagged with its neighborhoods.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatrixSequence {
    pub matrices: Vec<GossipMatrix>,
}

impl MatrixSequence {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Full product `P_t ... P_1` of the first `t` matrices.
    pub fn product(&self, t: usize, n: usize) -> Result<GossipMatrix, MatrixError> {
        let mut acc = GossipMatrix::identity(n);
        for m in &self.matrices[..t] {
            acc = m.mul(&acc)?;
        }
        Ok(acc)
    }
}

/// Disjoint neighborhoods for one iteration: every gossiping pair, then each
/// recorded virtual pair whose agents are not yet covered, in record order.
pub fn iteration_neighborhoods(
    rec: &IterationRecord,
    g: &Graph,
) -> Result<Vec<Neighborhood>, MatrixError> {
    let mut used = vec![false; g.n()];
    let mut parts = Vec::with_capacity(rec.gossips.len() + rec.virtual_gossips.len());
    for &(a, b) in &rec.gossips {
        used[a - 1] = true;
        used[b - 1] = true;
        parts.push(Neighborhood::pair(g, a, b)?);
    }
    for &(a, b) in &rec.virtual_gossips {
        if used[a - 1] || used[b - 1] {
            continue;
        }
        used[a - 1] = true;
        used[b - 1] = true;
        parts.push(Neighborhood::pair(g, a, b)?);
    }
    Ok(parts)
}

/// Distinct virtual pairs of one iteration as neighborhoods, in record order.
fn virtual_neighborhoods(rec: &IterationRecord, g: &Graph) -> Result<Vec<Neighborhood>, MatrixError> {
    let mut seen = BTreeSet::new();
    let mut parts = Vec::new();
    for &(a, b) in &rec.virtual_gossips {
        if seen.insert((a.min(b), a.max(b))) {
            parts.push(Neighborhood::pair(g, a, b)?);
        }
    }
    Ok(parts)
}

fn check_consistency(trace: &Trace, matrices: Vec<GossipMatrix>) -> Result<MatrixSequence, MatrixError> {
    let mut x = trace.x0.clone();
    for (idx, (m, rec)) in matrices.iter().zip(&trace.records).enumerate() {
        x = m.apply(&x)?;
        if x != rec.x {
            return Err(MatrixError::Inconsistent { t: idx + 1 });
        }
    }
    Ok(MatrixSequence { matrices })
}

/// One primitive per iteration: the multi-gossip augmented with the virtual
/// pairs that are disjoint from it and from each other (greedy, record order).
/// Checks `x(t) = P_t x(t-1)` exactly at every step, which is
/// `x(t) = P_t ... P_1 x(0)`.
pub fn reconstruct_primitive_sequence(trace: &Trace) -> Result<MatrixSequence, MatrixError> {
    let g = &trace.graph;
    let matrices = trace
        .records
        .iter()
        .map(|rec| multi_primitive(g, &iteration_neighborhoods(rec, g)?))
        .collect::<Result<Vec<_>, _>>()?;
    check_consistency(trace, matrices)
}

/// One matrix per iteration: the multi-gossip primitive times a pair primitive
/// for every virtual gossip, `M(t) = Q P_{L_1} ... P_{L_k}`.
///
/// Each virtual pair holds equal values, so its factor fixes `x(t)` and the
/// product stays consistent even when the pair shares an agent with a gossip
/// (under Protocol III a gossiping agent also rotates its equal-valued
/// receivers). Such an `M(t)` is a product of primitives rather than a single
/// primitive; its neighborhoods list every factor. Consistency is checked
/// exactly at every step.
pub fn reconstruct_consistent_sequence(trace: &Trace) -> Result<MatrixSequence, MatrixError> {
    let g = &trace.graph;
    let mut matrices = Vec::with_capacity(trace.len());
    for rec in &trace.records {
        let gossip_parts = rec
            .gossips
            .iter()
            .map(|&(a, b)| Neighborhood::pair(g, a, b))
            .collect::<Result<Vec<_>, _>>()?;
        let mut m = multi_primitive(g, &gossip_parts)?;
        for l in virtual_neighborhoods(rec, g)? {
            m.mul_primitive_right(&l);
        }
        matrices.push(m);
    }
    check_consistency(trace, matrices)
}

struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), components: n }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.components -= 1;
        }
    }

    fn absorb(&mut self, m: &GossipMatrix) {
        for l in &m.neighborhoods {
            let mut it = l.labels();
            if let Some(first) = it.next() {
                for other in it {
                    self.union(first - 1, other - 1);
                }
            }
        }
    }
}

/// Whether the matrices together induce a connected spanning subgraph of `g`.
pub fn is_complete(matrices: &[GossipMatrix], g: &Graph) -> bool {
    let mut uf = UnionFind::new(g.n());
    for m in matrices {
        uf.absorb(m);
    }
    uf.components == 1
}

/// Smallest `T` such that every length-`T` window of the sequence is complete,
/// or `None` if the whole sequence is not.
pub fn repetitive_completeness_period(seq: &MatrixSequence, g: &Graph) -> Option<usize> {
    let len = seq.len();
    // shortest complete window starting at each index
    let mut reach = vec![usize::MAX; len];
    for (s, slot) in reach.iter_mut().enumerate() {
        let mut uf = UnionFind::new(g.n());
        for (k, m) in seq.matrices[s..].iter().enumerate() {
            uf.absorb(m);
            if uf.components == 1 {
                *slot = k + 1;
                break;
            }
        }
    }
    (1..=len).find(|&t| reach[..=len - t].iter().all(|&w| w <= t))
}

/// Edges of `g` induced by the sequence as a whole.
pub fn induced_union(seq: &[GossipMatrix], g: &Graph) -> Graph {
    let graphs: Vec<Graph> = seq.iter().map(|m| m.induced_graph(g)).collect();
    if graphs.is_empty() {
        return Graph::edgeless(g.n()).expect("n >= 2");
    }
    crate::graph::union_induced(&graphs).expect("same vertex set")
}
