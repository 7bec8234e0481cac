use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::{CycleReport, EngineError, Protocol, QueueInit, SimState};
use crate::graph::{generate, Graph, GraphKind, Label};
use crate::value::{from_int, serde_one, serde_vec, Rational};

/// Instances to try: every graph is paired with a bounded set of integer
/// start vectors and a bounded set of queue assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub protocol: Protocol,
    pub graphs: Vec<Graph>,
    /// Start values are integers in `0..=value_max`.
    pub value_max: i64,
    /// All non-constant vectors when there are at most this many, otherwise a
    /// seeded sample of this size.
    pub values_per_graph: usize,
    /// All queue assignments when there are at most this many, otherwise a
    /// seeded sample of this size.
    pub queues_per_graph: usize,
    pub seed: u64,
}

impl SearchSpace {
    /// Every connected labeled graph up to 4 vertices, then the standard
    /// families and a few random graphs for `5..=max_n`.
    pub fn small_graphs(max_n: usize) -> Vec<Graph> {
        let mut out = Vec::new();
        for n in 2..=max_n.min(4) {
            let pairs: Vec<(Label, Label)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
            for mask in 1u32..(1 << pairs.len()) {
                let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
                if let Ok(g) = Graph::allowable(n, edges) {
                    out.push(g);
                }
            }
        }
        for n in 5..=max_n {
            let mut kinds = vec![
                GraphKind::Path { n },
                GraphKind::Cycle { n },
                GraphKind::Star { n },
                GraphKind::Complete { n },
            ];
            for seed in 0..3 {
                kinds.push(GraphKind::RandomTree { n, seed });
                kinds.push(GraphKind::RandomConnected { n, p: 0.5, seed });
            }
            for kind in kinds {
                let g = generate(&kind).expect("feasible family parameters");
                if !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        out
    }
}

/// A run that revisits an exact global state away from consensus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCertificate {
    pub protocol: Protocol,
    pub graph: Graph,
    #[serde(with = "serde_vec")]
    pub x0: Vec<Rational>,
    pub queues: Vec<Vec<Label>>,
    pub horizon: usize,
    pub cycle_start: usize,
    pub cycle_length: usize,
    #[serde(with = "serde_one")]
    pub v: Rational,
    /// JSONL of every iteration up to the repeat.
    pub trace_jsonl: String,
}

impl FailureCertificate {
    /// Re-simulates from the embedded initial conditions and checks that the
    /// same cycle and the same trace bytes come out.
    pub fn replay(&self) -> Result<bool, EngineError> {
        let (report, jsonl) = run_instance(self.protocol, &self.graph, &self.x0, &self.queues, self.horizon)?;
        Ok(report.is_some_and(|r| {
            r.cycle_start == self.cycle_start && r.cycle_length == self.cycle_length && r.v == self.v
        }) && jsonl == self.trace_jsonl)
    }
}

fn run_instance(
    protocol: Protocol,
    g: &Graph,
    x0: &[Rational],
    queues: &[Vec<Label>],
    horizon: usize,
) -> Result<(Option<CycleReport>, String), EngineError> {
    let mut s = SimState::new(g.clone(), protocol, x0.to_vec(), &QueueInit::Explicit(queues.to_vec()))?;
    let report = s.detect_cycle(horizon)?;
    let mut jsonl = Vec::new();
    s.trace().write_jsonl(&mut jsonl).expect("writing to memory");
    Ok((report, String::from_utf8(jsonl).expect("JSON is UTF-8")))
}

fn value_vectors(n: usize, value_max: i64, limit: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Rational>> {
    let base = (value_max + 1) as u128;
    let total = base.checked_pow(n as u32).unwrap_or(u128::MAX);
    let constant = |v: &[i64]| v.iter().all(|&a| a == v[0]);
    let mut out: Vec<Vec<i64>> = Vec::new();
    if total <= limit as u128 + base {
        for code in 0..total {
            let mut c = code;
            let v: Vec<i64> = (0..n)
                .map(|_| {
                    let d = (c % base) as i64;
                    c /= base;
                    d
                })
                .collect();
            if !constant(&v) {
                out.push(v);
            }
        }
    } else {
        while out.len() < limit {
            let v: Vec<i64> = (0..n).map(|_| rng.random_range(0..=value_max)).collect();
            if !constant(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out.truncate(limit);
    out.into_iter().map(|v| v.into_iter().map(from_int).collect()).collect()
}

fn permutations(items: &[Label]) -> Vec<Vec<Label>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn queue_assignments(g: &Graph, limit: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<Label>>> {
    let total = g
        .labels()
        .try_fold(1usize, |acc, v| (1..=g.degree(v)).try_fold(acc, |a, k| a.checked_mul(k)));
    if total.is_some_and(|t| t <= limit) {
        let per_agent: Vec<Vec<Vec<Label>>> = g.labels().map(|v| permutations(g.neighbors(v))).collect();
        let mut out = vec![Vec::new()];
        for perms in &per_agent {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Vec<Label>>| {
                    perms.iter().map(move |p| {
                        let mut q = prefix.clone();
                        q.push(p.clone());
                        q
                    })
                })
                .collect();
        }
        out
    } else {
        (0..limit)
            .map(|_| {
                g.labels()
                    .map(|v| {
                        let mut q = g.neighbors(v).to_vec();
                        q.shuffle(rng);
                        q
                    })
                    .collect()
            })
            .collect()
    }
}

/// Runs every instance of `space` for up to `horizon` iterations with cycle
/// detection and returns the first (in graph, value, queue order) whose
/// repeated state has a positive complete-graph indicator.
pub fn search_protocol1_failure(space: &SearchSpace, horizon: usize) -> Result<Option<FailureCertificate>, HarnessError> {
    if horizon == 0 {
        return Err(EngineError::InvalidHorizon.into());
    }
    let mut instances = Vec::new();
    for (gi, g) in space.graphs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(space.seed ^ (gi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let values = value_vectors(g.n(), space.value_max, space.values_per_graph, &mut rng);
        let queues = queue_assignments(g, space.queues_per_graph, &mut rng);
        for x0 in &values {
            for q in &queues {
                instances.push((g, x0.clone(), q.clone()));
            }
        }
    }
    let found = instances.par_iter().find_map_first(|(g, x0, q)| {
        let (report, trace_jsonl) = run_instance(space.protocol, g, x0, q, horizon).expect("instances are valid");
        let report = report.filter(CycleReport::is_failure)?;
        Some(FailureCertificate {
            protocol: space.protocol,
            graph: (*g).clone(),
            x0: x0.clone(),
            queues: q.clone(),
            horizon,
            cycle_start: report.cycle_start,
            cycle_length: report.cycle_length,
            v: report.v,
            trace_jsonl,
        })
    });
    Ok(found)
}

/// Number of instances `space` expands to.
pub fn instance_count(space: &SearchSpace) -> usize {
    space
        .graphs
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(space.seed ^ (gi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            value_vectors(g.n(), space.value_max, space.values_per_graph, &mut rng).len()
                * queue_assignments(g, space.queues_per_graph, &mut rng).len()
        })
        .sum()
}
