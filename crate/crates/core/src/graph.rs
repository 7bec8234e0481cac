//! Allowable gossip graphs.
//!
//! A [`Graph`] is a simple undirected graph on labels `1..=n`. Allowable gossip
//! graphs must additionally be connected; induced subgraphs built by the matrix
//! layer are usually not, so connectivity is checked only on request.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Rational;

/// Agent label, `1..=n`.
pub type Label = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(Label),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(Label, Label),
    #[error("label {label} outside 1..={n}")]
    LabelOutOfRange { label: Label, n: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("vertex counts differ: {0} vs {1}")]
    MismatchedVertexCount(usize, usize),
    #[error("union of an empty graph list")]
    EmptyUnion,
    #[error("infeasible parameters for {kind}: {reason}")]
    InfeasibleParameters { kind: &'static str, reason: String },
    #[error("malformed edge list: {0}")]
    Parse(String),
}

/// Simple undirected graph with labels `1..=n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(Label, Label)>,
    adj: Vec<Vec<Label>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

fn normalize(u: Label, v: Label) -> (Label, Label) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    /// Validates a simple graph. Connectivity is not required.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for label in [u, v] {
                if label == 0 || label > n {
                    return Err(GraphError::LabelOutOfRange { label, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let e = normalize(u, v);
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self::from_edge_set(n, set))
    }

    /// Validates an allowable gossip graph: simple and connected.
    pub fn allowable<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let g = Self::new(n, edges)?;
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    fn from_edge_set(n: usize, edges: BTreeSet<(Label, Label)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u - 1].push(v);
            adj[v - 1].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        1..=self.n
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Label, Label)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: Label, v: Label) -> bool {
        self.edges.contains(&normalize(u, v))
    }

    /// Sorted neighbor labels of `v`.
    pub fn neighbors(&self, v: Label) -> &[Label] {
        &self.adj[v - 1]
    }

    pub fn degree(&self, v: Label) -> usize {
        self.adj[v - 1].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Exact average degree `(1/n) Σ d_i`.
    pub fn average_degree(&self) -> Rational {
        let total: usize = self.adj.iter().map(Vec::len).sum();
        BigRational::new(total.into(), self.n.into())
    }

    /// Connected component index per vertex (0-based component ids).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[v] {
                    if comp[w - 1] == usize::MAX {
                        comp[w - 1] = next;
                        queue.push_back(w - 1);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.n && self.is_connected()
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count() == self.n * (self.n - 1) / 2
    }

    /// BFS distances from `src`; `None` for unreachable vertices.
    pub fn distances_from(&self, src: Label) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src - 1] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v - 1].unwrap_or(0);
            for &w in self.neighbors(v) {
                if dist[w - 1].is_none() {
                    dist[w - 1] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// All-pairs eccentricity maximum; `None` when disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for v in self.labels() {
            for d in self.distances_from(v) {
                best = best.max(d?);
            }
        }
        Some(best)
    }

    /// True when every edge of `self` is an edge of `other` on the same vertex set.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges.is_subset(&other.edges)
    }

    pub fn metrics(&self) -> Metrics {
        let diameter = self.diameter();
        Metrics {
            n: self.n,
            edge_count: self.edge_count(),
            max_degree: self.max_degree(),
            average_degree: self.average_degree(),
            diameter,
            connected: diameter.is_some(),
        }
    }

    /// Edge-list text: `n m` header then one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edge_count());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| GraphError::Parse(format!("not a non-negative integer: {t:?}")))
        });
        let mut next = |what: &str| {
            tokens
                .next()
                .unwrap_or_else(|| Err(GraphError::Parse(format!("missing {what}"))))
        };
        let n = next("vertex count")?;
        let m = next("edge count")?;
        let mut edges = Vec::with_capacity(m);
        for k in 0..m {
            let u = next(&format!("edge {} endpoint", k + 1))?;
            let v = next(&format!("edge {} endpoint", k + 1))?;
            edges.push((u, v));
        }
        if tokens.next().is_some() {
            return Err(GraphError::Parse(format!("more than the declared {m} edges")));
        }
        Self::new(n, edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
        }
    }

    /// Reads either the JSON form or the edge-list text form.
    pub fn parse_any(text: &str) -> Result<Self, GraphError> {
        if text.trim_start().starts_with('{') {
            let json: GraphJson =
                serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
            Graph::try_from(json)
        } else {
            Self::parse_edge_list(text)
        }
    }
}

/// JSON form `{"n": int, "edges": [[u, v], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[Label; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, GraphError> {
        Graph::new(j.n, j.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        Graph::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Structural quantities referenced by the convergence results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    pub n: usize,
    pub edge_count: usize,
    pub max_degree: usize,
    pub average_degree: Rational,
    /// `None` when the graph is disconnected.
    pub diameter: Option<usize>,
    pub connected: bool,
}

/// Union of edge sets over graphs sharing a vertex set.
pub fn union_induced(graphs: &[Graph]) -> Result<Graph, GraphError> {
    let first = graphs.first().ok_or(GraphError::EmptyUnion)?;
    let mut edges = BTreeSet::new();
    for g in graphs {
        if g.n != first.n {
            return Err(GraphError::MismatchedVertexCount(first.n, g.n));
        }
        edges.extend(g.edges.iter().copied());
    }
    Ok(Graph::from_edge_set(first.n, edges))
}

/// Graph families the generator knows. Random kinds carry their seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    Path { n: usize },
    Cycle { n: usize },
    /// Center is vertex 1.
    Star { n: usize },
    Complete { n: usize },
    /// `rows x cols` lattice with row-major labels.
    Grid { rows: usize, cols: usize },
    RandomTree { n: usize, seed: u64 },
    RandomConnected { n: usize, p: f64, seed: u64 },
}

const RANDOM_CONNECTED_RETRIES: usize = 64;

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Path { .. } => "path",
            GraphKind::Cycle { .. } => "cycle",
            GraphKind::Star { .. } => "star",
            GraphKind::Complete { .. } => "complete",
            GraphKind::Grid { .. } => "grid",
            GraphKind::RandomTree { .. } => "random-tree",
            GraphKind::RandomConnected { .. } => "random-connected",
        }
    }

    /// Parses the CLI form `KIND,n[,p]`. Grids accept `grid,RxC` or `grid,n`
    /// (most square factorization). Random kinds take `seed`.
    pub fn parse_cli(spec: &str, seed: u64) -> Result<Self, GraphError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let bad = |reason: String| GraphError::Parse(format!("--gen {spec:?}: {reason}"));
        let kind = parts[0];
        let size = parts.get(1).ok_or_else(|| bad("missing vertex count".into()))?;
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("vertex count {s:?} is not an integer")))
        };
        let expect_len = |len: usize| {
            if parts.len() == len {
                Ok(())
            } else {
                Err(bad(format!("expected {} comma-separated fields", len)))
            }
        };
        let kind = match kind {
            "path" => {
                expect_len(2)?;
                GraphKind::Path { n: parse_n(size)? }
            }
            "cycle" => {
                expect_len(2)?;
                GraphKind::Cycle { n: parse_n(size)? }
            }
            "star" => {
                expect_len(2)?;
                GraphKind::Star { n: parse_n(size)? }
            }
            "complete" => {
                expect_len(2)?;
                GraphKind::Complete { n: parse_n(size)? }
            }
            "grid" => {
                expect_len(2)?;
                if let Some((r, c)) = size.split_once('x') {
                    GraphKind::Grid { rows: parse_n(r)?, cols: parse_n(c)? }
                } else {
                    let n = parse_n(size)?;
                    let rows = (1..=n).filter(|r| r * r <= n && n % r == 0).max().unwrap_or(1);
                    GraphKind::Grid { rows, cols: n / rows.max(1) }
                }
            }
            "random-tree" => {
                expect_len(2)?;
                GraphKind::RandomTree { n: parse_n(size)?, seed }
            }
            "random-connected" => {
                expect_len(3)?;
                let p = parts[2]
                    .parse::<f64>()
                    .map_err(|_| bad(format!("edge probability {:?} is not a number", parts[2])))?;
                GraphKind::RandomConnected { n: parse_n(size)?, p, seed }
            }
            other => return Err(bad(format!("unknown graph kind {other:?}"))),
        };
        Ok(kind)
    }
}

impl FromStr for GraphKind {
    type Err = GraphError;

    /// Same as [`GraphKind::parse_cli`] with seed 0.
    fn from_str(s: &str) -> Result<Self, GraphError> {
        GraphKind::parse_cli(s, 0)
    }
}

fn infeasible(kind: &'static str, reason: impl Into<String>) -> GraphError {
    GraphError::InfeasibleParameters { kind, reason: reason.into() }
}

/// Builds a connected graph of the requested family. Identical input always
/// yields the identical edge set.
///
/// `RandomConnected` samples G(n, p) up to a fixed number of times; if every
/// sample is disconnected the last sample is joined with a random spanning
/// tree, so the call never fails for a valid `p`.
pub fn generate(kind: &GraphKind) -> Result<Graph, GraphError> {
    let name = kind.name();
    let need = |n: usize, min: usize| {
        if n < min {
            Err(infeasible(name, format!("n = {n} but at least {min} vertices are required")))
        } else {
            Ok(())
        }
    };
    match *kind {
        GraphKind::Path { n } => {
            need(n, 2)?;
            Graph::allowable(n, (1..n).map(|i| (i, i + 1)))
        }
        GraphKind::Cycle { n } => {
            need(n, 3)?;
            Graph::allowable(n, (1..=n).map(|i| (i, i % n + 1)))
        }
        GraphKind::Star { n } => {
            need(n, 2)?;
            Graph::allowable(n, (2..=n).map(|i| (1, i)))
        }
        GraphKind::Complete { n } => {
            need(n, 2)?;
            Graph::allowable(n, (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))))
        }
        GraphKind::Grid { rows, cols } => {
            need(rows * cols, 2)?;
            let at = |r: usize, c: usize| r * cols + c + 1;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((at(r, c), at(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((at(r, c), at(r + 1, c)));
                    }
                }
            }
            Graph::allowable(rows * cols, edges)
        }
        GraphKind::RandomTree { n, seed } => {
            need(n, 2)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Graph::allowable(n, random_tree_edges(n, &mut rng))
        }
        GraphKind::RandomConnected { n, p, seed } => {
            need(n, 2)?;
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(infeasible(name, format!("edge probability {p} outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut last = BTreeSet::new();
            for _ in 0..RANDOM_CONNECTED_RETRIES {
                last = BTreeSet::new();
                for i in 1..=n {
                    for j in i + 1..=n {
                        if rng.random_bool(p) {
                            last.insert((i, j));
                        }
                    }
                }
                let g = Graph::from_edge_set(n, last.clone());
                if g.is_connected() {
                    return Ok(g);
                }
            }
            last.extend(random_tree_edges(n, &mut rng).into_iter().map(|(u, v)| normalize(u, v)));
            Ok(Graph::from_edge_set(n, last))
        }
    }
}

/// Uniform random labelled tree via a random Prüfer sequence.
fn random_tree_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(Label, Label)> {
    if n == 2 {
        return vec![(1, 2)];
    }
    let seq: Vec<Label> = (0..n - 2).map(|_| rng.random_range(1..=n)).collect();
    let mut degree = vec![1usize; n + 1];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<Label> = (1..=n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = *leaves.iter().next().expect("Prüfer decoding always has a leaf");
        leaves.remove(&leaf);
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let rest: Vec<Label> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges.shuffle(rng);
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ratio;

    #[test]
    fn smallest_connected_graph() {
        let g = Graph::allowable(2, [(1, 2)]).unwrap();
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.degree(2), 1);
        assert_eq!(g.diameter(), Some(1));
    }

    #[test]
    fn three_path_metrics() {
        let g = Graph::allowable(3, [(1, 2), (2, 3)]).unwrap();
        let m = g.metrics();
        assert_eq!((m.max_degree, m.edge_count, m.diameter), (2, 2, Some(2)));
        assert_eq!(m.average_degree, ratio(4, 3));
        assert!(m.average_degree < ratio(5, 2));
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert_eq!(Graph::new(3, [(1, 2), (1, 2)]), Err(GraphError::DuplicateEdge(1, 2)));
        assert_eq!(Graph::new(3, [(1, 2), (2, 1)]), Err(GraphError::DuplicateEdge(1, 2)));
        assert_eq!(Graph::new(3, [(2, 2)]), Err(GraphError::SelfLoop(2)));
        assert_eq!(
            Graph::new(3, [(1, 4)]),
            Err(GraphError::LabelOutOfRange { label: 4, n: 3 })
        );
        assert_eq!(Graph::new(3, [(0, 1)]), Err(GraphError::LabelOutOfRange { label: 0, n: 3 }));
        assert_eq!(Graph::allowable(3, [(1, 2)]), Err(GraphError::Disconnected));
        assert_eq!(Graph::new(1, []), Err(GraphError::TooFewVertices(1)));
        // induced subgraphs may be disconnected
        assert!(Graph::new(3, [(1, 2)]).is_ok());
    }

    #[test]
    fn complete_and_star_metrics() {
        let k4 = generate(&GraphKind::Complete { n: 4 }).unwrap().metrics();
        assert_eq!((k4.edge_count, k4.max_degree, k4.diameter), (6, 3, Some(1)));
        assert_eq!(k4.average_degree, ratio(3, 1));

        let star = generate(&GraphKind::Star { n: 5 }).unwrap().metrics();
        assert_eq!((star.edge_count, star.max_degree, star.diameter), (4, 4, Some(2)));
        assert_eq!(star.average_degree, ratio(8, 5));
    }

    #[test]
    fn generators() {
        let p = generate(&GraphKind::Path { n: 3 }).unwrap();
        assert_eq!(p.edges().collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        let c = generate(&GraphKind::Cycle { n: 5 }).unwrap();
        assert_eq!(c.edge_count(), 5);
        assert!(c.labels().all(|v| c.degree(v) == 2));
        let grid = generate(&GraphKind::Grid { rows: 2, cols: 3 }).unwrap();
        assert_eq!(grid.edge_count(), 7);
        assert_eq!(grid.diameter(), Some(3));
        assert!(generate(&GraphKind::Cycle { n: 2 }).is_err());
        assert!(generate(&GraphKind::RandomConnected { n: 4, p: 1.5, seed: 0 }).is_err());
    }

    #[test]
    fn random_tree_is_deterministic() {
        let kind = GraphKind::RandomTree { n: 20, seed: 7 };
        let a = generate(&kind).unwrap();
        let b = generate(&kind).unwrap();
        assert_eq!(a, b);
        assert!(a.is_tree());
        let other = generate(&GraphKind::RandomTree { n: 20, seed: 8 }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn random_connected_is_connected_even_when_sparse() {
        let g = generate(&GraphKind::RandomConnected { n: 10, p: 0.3, seed: 1 }).unwrap();
        assert_eq!(g.n(), 10);
        assert!(g.is_connected());
        let sparse = generate(&GraphKind::RandomConnected { n: 12, p: 0.0, seed: 3 }).unwrap();
        assert!(sparse.is_tree());
    }

    #[test]
    fn union_cases() {
        let a = Graph::new(3, [(1, 2)]).unwrap();
        let b = Graph::new(3, [(2, 3)]).unwrap();
        let u = union_induced(&[a.clone(), b]).unwrap();
        assert_eq!(u.edges().collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        assert_eq!(union_induced(&[a.clone(), a.clone()]).unwrap(), a);
        let e = Graph::edgeless(4).unwrap();
        assert_eq!(union_induced(&[e.clone(), e.clone()]).unwrap(), e);
        let other = Graph::edgeless(5).unwrap();
        assert_eq!(union_induced(&[e, other]), Err(GraphError::MismatchedVertexCount(4, 5)));
        assert_eq!(union_induced(&[]), Err(GraphError::EmptyUnion));
    }

    #[test]
    fn text_and_json_formats() {
        let g = generate(&GraphKind::Cycle { n: 4 }).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "4 4\n1 2\n1 4\n2 3\n3 4\n");
        assert_eq!(Graph::parse_any(&text).unwrap(), g);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"n":4,"edges":[[1,2],[1,4],[2,3],[3,4]]}"#);
        assert_eq!(Graph::parse_any(&json).unwrap(), g);
        assert!(Graph::parse_edge_list("3 2\n1 2\n").is_err());
        assert!(Graph::parse_edge_list("3 1\n1 2\n2 3\n").is_err());
    }

    #[test]
    fn cli_kind_parsing() {
        assert_eq!("path,5".parse::<GraphKind>().unwrap(), GraphKind::Path { n: 5 });
        assert_eq!(
            GraphKind::parse_cli("random-connected,10,0.3", 4).unwrap(),
            GraphKind::RandomConnected { n: 10, p: 0.3, seed: 4 }
        );
        assert_eq!("grid,12".parse::<GraphKind>().unwrap(), GraphKind::Grid { rows: 3, cols: 4 });
        assert_eq!("grid,2x5".parse::<GraphKind>().unwrap(), GraphKind::Grid { rows: 2, cols: 5 });
        assert!("blob,3".parse::<GraphKind>().is_err());
        assert!("path".parse::<GraphKind>().is_err());
    }
}
