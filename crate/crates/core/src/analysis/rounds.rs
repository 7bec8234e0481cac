//! Rounds of gossiping: an agent completes a round once it has gossiped or
//! virtually gossiped with every neighbor.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::graph::Label;

/// Round completion times per agent, all rounds starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTracker {
    /// Neighbors credited since the agent's current round began.
    pub in_progress: Vec<BTreeSet<Label>>,
    /// Iteration indices at which each agent completed a round.
    pub completions: Vec<Vec<usize>>,
}

impl RoundTracker {
    pub fn completions_of(&self, i: Label) -> &[usize] {
        &self.completions[i - 1]
    }
}

pub fn track_rounds(trace: &Trace) -> RoundTracker {
    let g = &trace.graph;
    let mut in_progress = vec![BTreeSet::new(); g.n()];
    let mut completions = vec![Vec::new(); g.n()];
    for rec in &trace.records {
        for i in g.labels() {
            let set = &mut in_progress[i - 1];
            set.extend(rec.credited(i));
            if set.len() == g.degree(i) {
                completions[i - 1].push(rec.t);
                set.clear();
            }
        }
    }
    RoundTracker { in_progress, completions }
}

/// A window in which some agent missed a neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedRound {
    pub window_start: usize,
    pub agent: Label,
    pub neighbor: Label,
}

/// Checks that every agent completes a round inside every window of `width`
/// consecutive iterations among the first `limit` iterations. Returns the
/// number of windows checked or the earliest miss.
pub fn rounds_in_every_window(
    trace: &Trace,
    width: usize,
    limit: usize,
) -> Result<usize, MissedRound> {
    let g = &trace.graph;
    let limit = limit.min(trace.len());
    if width == 0 || limit < width {
        return Ok(0);
    }
    let mut earliest: Option<MissedRound> = None;
    for i in g.labels() {
        for &j in g.neighbors(i) {
            // times at which i is credited with j
            let hits: Vec<usize> = trace.records[..limit]
                .iter()
                .filter(|r| r.credited(i).any(|k| k == j))
                .map(|r| r.t)
                .collect();
            // the first window with no hit starts right after a hit (or at 0)
            let mut window_start = 0;
            let mut miss = None;
            for &h in hits.iter().chain(std::iter::once(&usize::MAX)) {
                let end = h.min(limit);
                if end >= window_start + width {
                    miss = Some(window_start);
                    break;
                }
                if h == usize::MAX {
                    break;
                }
                window_start = h + 1;
            }
            if let Some(s) = miss {
                if earliest.is_none_or(|e| s < e.window_start) {
                    earliest = Some(MissedRound { window_start: s, agent: i, neighbor: j });
                }
            }
        }
    }
    match earliest {
        Some(m) => Err(m),
        None => Ok(limit - width + 1),
    }
}
