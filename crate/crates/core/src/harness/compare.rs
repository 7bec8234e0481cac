use serde::{Deserialize, Serialize};

use super::config::{load_graph, resolve_values, GraphSource, ValueSource};
use super::HarnessError;
use crate::engine::{Protocol, QueueInit, SimState, StopReason, Trace};
use crate::graph::GraphJson;
use crate::matrices::{reconstruct_consistent_sequence, repetitive_completeness_period};
use crate::value::{from_int, parse_rational, ratio, serde_one, Rational};

/// Shared initial conditions for a Protocol II vs III comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub graph: GraphSource,
    pub x0: ValueSource,
    #[serde(default = "default_queues")]
    pub queues: QueueInit,
    pub max_iters: usize,
    /// `P/Q`, as for experiments.
    pub stop_ratio: String,
}

fn default_queues() -> QueueInit {
    QueueInit::Sorted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub protocol: Protocol,
    /// Iterations executed before stopping.
    pub iterations: usize,
    /// Whether the stop ratio (or consensus) was reached within the budget.
    pub reached: bool,
    pub stop_reason: StopReason,
    pub total_transmissions: usize,
    pub total_gossips: usize,
    pub total_virtual_gossips: usize,
    pub max_transmissions: usize,
    /// Measured repetitive completeness period of the reconstructed matrices.
    pub empirical_period: Option<usize>,
}

impl ProtocolSummary {
    /// Everything but `protocol` and `stop_reason` is read off the trace.
    pub fn from_trace(trace: &Trace, stop_reason: StopReason) -> Result<Self, HarnessError> {
        let seq = reconstruct_consistent_sequence(trace)?;
        let recs = &trace.records;
        Ok(ProtocolSummary {
            protocol: trace.protocol,
            iterations: trace.len(),
            reached: stop_reason != StopReason::Budget,
            stop_reason,
            total_transmissions: recs.iter().map(|r| r.transmissions).sum(),
            total_gossips: recs.iter().map(|r| r.gossips.len()).sum(),
            total_virtual_gossips: recs.iter().map(|r| r.virtual_gossips.len()).sum(),
            max_transmissions: recs.iter().map(|r| r.transmissions).max().unwrap_or(0),
            empirical_period: repetitive_completeness_period(&seq, &trace.graph),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub graph: GraphJson,
    pub n: usize,
    #[serde(with = "serde_one")]
    pub average_degree: Rational,
    /// `2n + floor(n/2)`.
    pub transmission_cap: usize,
    /// Transmissions per iteration if every agent broadcast to every neighbor:
    /// `n * d_avg`.
    #[serde(with = "serde_one")]
    pub broadcast_baseline: Rational,
    /// `d_avg > 5/2`: the protocols' per-iteration cap beats broadcasting.
    pub gossip_cheaper: bool,
    /// `d_avg < 5/2`: broadcasting is cheaper than the cap.
    pub broadcast_cheaper: bool,
    pub protocol_ii: ProtocolSummary,
    pub protocol_iii: ProtocolSummary,
}

impl ComparisonReport {
    /// Protocol III needed no more iterations than Protocol II, and reached the threshold.
    pub fn iii_not_slower(&self) -> bool {
        self.protocol_iii.reached && self.protocol_iii.iterations <= self.protocol_ii.iterations
    }
}

/// Builds the report from the two finished traces.
pub fn comparison_report(
    ii: (&Trace, StopReason),
    iii: (&Trace, StopReason),
) -> Result<ComparisonReport, HarnessError> {
    let g = &ii.0.graph;
    let n = g.n();
    let d_avg = g.average_degree();
    let threshold = ratio(5, 2);
    Ok(ComparisonReport {
        graph: g.to_json(),
        n,
        transmission_cap: 2 * n + n / 2,
        broadcast_baseline: from_int(n as i64) * &d_avg,
        gossip_cheaper: d_avg > threshold,
        broadcast_cheaper: d_avg < threshold,
        average_degree: d_avg,
        protocol_ii: ProtocolSummary::from_trace(ii.0, ii.1)?,
        protocol_iii: ProtocolSummary::from_trace(iii.0, iii.1)?,
    })
}

/// Runs Protocols II and III from identical initial conditions.
pub fn compare_protocols(cfg: &CompareConfig) -> Result<ComparisonReport, HarnessError> {
    let g = load_graph(&cfg.graph)?;
    let x0 = resolve_values(&cfg.x0, g.n())?;
    let queues = cfg
        .queues
        .build(&g)
        .map_err(|e| super::ConfigError::new("queues", e.to_string()))?;
    let stop = parse_rational(&cfg.stop_ratio).map_err(|e| super::ConfigError::new("stop_ratio", e.to_string()))?;
    let run = |p: Protocol| {
        let mut s = SimState::new(g.clone(), p, x0.clone(), &QueueInit::Explicit(queues.clone())).expect("validated");
        let reason = s.run(cfg.max_iters, Some(&stop));
        (s.into_trace(), reason)
    };
    let (t2, r2) = run(Protocol::II);
    let (t3, r3) = run(Protocol::III);
    comparison_report((&t2, r2), (&t3, r3))
}
