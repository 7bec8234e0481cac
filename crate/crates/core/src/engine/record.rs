use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EngineError, Protocol};
use crate::graph::{Graph, Label};
use crate::value::{serde_vec, Rational};

/// Everything that happened during one synchronized iteration.
///
/// Serializes to one JSONL line with exactly the fields below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    /// Agent label to its preferred neighbor at the start of the iteration.
    pub preferred: BTreeMap<Label, Label>,
    /// `(requester, target)` ordered by requester.
    pub requests: Vec<(Label, Label)>,
    /// `(acceptor, requester)` ordered by acceptor.
    pub acceptances: Vec<(Label, Label)>,
    /// Gossiping pairs `(i, j)` with `i < j`, sorted.
    pub gossips: Vec<(Label, Label)>,
    /// `(agent, neighbor)`; the relation is not symmetric.
    pub virtual_gossips: Vec<(Label, Label)>,
    pub transmissions: usize,
    /// Values after the iteration.
    #[serde(with = "serde_vec")]
    pub x: Vec<Rational>,
}

impl IterationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    /// Whether `a` gossiped with `b` in this iteration.
    pub fn gossiped(&self, a: Label, b: Label) -> bool {
        let pair = if a < b { (a, b) } else { (b, a) };
        self.gossips.binary_search(&pair).is_ok()
    }

    /// Neighbors agent `i` is credited with for round tracking: actual gossip
    /// partners plus neighbors `i` virtually gossiped with.
    pub fn credited(&self, i: Label) -> impl Iterator<Item = Label> + '_ {
        let actual = self.gossips.iter().filter_map(move |&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        });
        let virt = self
            .virtual_gossips
            .iter()
            .filter_map(move |&(a, b)| (a == i).then_some(b));
        actual.chain(virt)
    }
}

/// A complete run: initial conditions plus the per-iteration log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub protocol: Protocol,
    pub graph: Graph,
    #[serde(with = "serde_vec")]
    pub x0: Vec<Rational>,
    pub initial_queues: Vec<Vec<Label>>,
    pub records: Vec<IterationRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Values at time `t` (`t = 0` is the initial vector).
    pub fn x_at(&self, t: usize) -> &[Rational] {
        if t == 0 {
            &self.x0
        } else {
            &self.records[t - 1].x
        }
    }

    /// Values entering iteration `t`.
    pub fn x_before(&self, t: usize) -> &[Rational] {
        self.x_at(t)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(out, "{}", r.to_json_line())?;
        }
        Ok(())
    }

    /// Rebuilds a trace from JSONL records and the initial conditions that the
    /// records do not carry.
    pub fn from_jsonl<R: BufRead>(
        protocol: Protocol,
        graph: Graph,
        x0: Vec<Rational>,
        reader: R,
    ) -> Result<Self, EngineError> {
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EngineError::TraceFormat(format!("line {}: {e}", idx + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: IterationRecord = serde_json::from_str(&line)
                .map_err(|e| EngineError::TraceFormat(format!("line {}: {e}", idx + 1)))?;
            if rec.x.len() != graph.n() {
                return Err(EngineError::TraceFormat(format!(
                    "line {}: {} values for {} agents",
                    idx + 1,
                    rec.x.len(),
                    graph.n()
                )));
            }
            records.push(rec);
        }
        if x0.len() != graph.n() {
            return Err(EngineError::LengthMismatch { expected: graph.n(), got: x0.len() });
        }
        Ok(Trace { protocol, graph, x0, initial_queues: Vec::new(), records })
    }
}
