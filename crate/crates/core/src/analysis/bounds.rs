//! Runtime checks for the protocol guarantees, each scanning a finished trace.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::indicator::complete_value;
use super::rounds::rounds_in_every_window;
use super::AnalysisError;
use crate::engine::{Protocol, QueueInit, SimState, Trace};
use crate::graph::{Graph, GraphJson};
use crate::matrices::{is_complete, reconstruct_consistent_sequence};
use crate::value::{to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Every iteration has an agent equal to its preferred neighbor, or a
    /// gossip between unequal agents (Protocol II).
    LemmaGossip,
    /// Every `2d` consecutive iterations contain a gossip until consensus (Protocol II).
    LemmaDstep2d,
    /// Every iteration has a gossip or a virtual gossip (Protocol III).
    LemmaPizza,
    /// On trees, every `n - 1` window completes all rounds (Protocol II).
    TreePeriodNMinus1,
    /// Every `m` window (edge count) completes all rounds (Protocol III).
    PeriodEdgesM,
    /// `V(t + m) <= (1 - 4/n²) V(t)` for the complete indicator (Protocol III).
    Contraction4OverN2,
    /// At most `2n + floor(n/2)` transmissions per iteration (any protocol).
    Transmissions5nOver2,
}

impl Claim {
    pub const ALL: [Claim; 7] = [
        Claim::LemmaGossip,
        Claim::LemmaDstep2d,
        Claim::LemmaPizza,
        Claim::TreePeriodNMinus1,
        Claim::PeriodEdgesM,
        Claim::Contraction4OverN2,
        Claim::Transmissions5nOver2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::LemmaGossip => "lemma_gossip",
            Claim::LemmaDstep2d => "lemma_dstep_2d",
            Claim::LemmaPizza => "lemma_pizza",
            Claim::TreePeriodNMinus1 => "tree_period_n_minus_1",
            Claim::PeriodEdgesM => "period_edges_m",
            Claim::Contraction4OverN2 => "contraction_4_over_n2",
            Claim::Transmissions5nOver2 => "transmissions_5n_over_2",
        }
    }

    /// Protocol the claim is stated for; `None` means any.
    pub fn protocol(self) -> Option<Protocol> {
        match self {
            Claim::LemmaGossip | Claim::LemmaDstep2d | Claim::TreePeriodNMinus1 => Some(Protocol::II),
            Claim::LemmaPizza | Claim::PeriodEdgesM | Claim::Contraction4OverN2 => Some(Protocol::III),
            Claim::Transmissions5nOver2 => None,
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Claim {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Claim::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| AnalysisError::UnknownClaim(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Iteration (or window start) where the claim fails.
    pub t: usize,
    pub detail: String,
}

/// Outcome of one claim on one trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claim: Claim,
    pub protocol: Protocol,
    pub graph: GraphJson,
    pub seeds: Vec<u64>,
    pub windows_checked: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Counterexample>,
}

impl BoundReport {
    fn new(claim: Claim, trace: &Trace) -> Self {
        BoundReport {
            claim,
            protocol: trace.protocol,
            graph: trace.graph.to_json(),
            seeds: Vec::new(),
            windows_checked: 0,
            pass: true,
            counterexample: None,
        }
    }

    fn fail(mut self, t: usize, detail: String) -> Self {
        self.pass = false;
        self.counterexample = Some(Counterexample { t, detail });
        self
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }
}

/// Number of leading iterations that start away from consensus. Consensus is
/// absorbing, so this is a prefix.
fn active_iterations(trace: &Trace) -> usize {
    (0..trace.len())
        .find(|&t| {
            let x = trace.x_before(t);
            x.iter().all(|v| *v == x[0])
        })
        .unwrap_or(trace.len())
}

pub fn verify_bound(trace: &Trace, claim: Claim) -> Result<BoundReport, AnalysisError> {
    if let Some(expected) = claim.protocol() {
        if trace.protocol != expected {
            return Err(AnalysisError::ClaimProtocolMismatch { claim, expected, got: trace.protocol });
        }
    }
    let g = &trace.graph;
    let n = g.n();
    let report = BoundReport::new(claim, trace);
    let report = match claim {
        Claim::LemmaGossip => check_lemma_gossip(trace, report),
        Claim::LemmaDstep2d => {
            let width = 2 * g.max_degree();
            let active = active_iterations(trace);
            let mut report = report;
            let mut last_gossip: Option<usize> = None;
            for t in 0..active {
                if !trace.records[t].gossips.is_empty() {
                    last_gossip = Some(t);
                }
                if t + 1 >= width {
                    report.windows_checked += 1;
                    let start = t + 1 - width;
                    if last_gossip.is_none_or(|l| l < start) {
                        return Ok(report.fail(start, format!("no gossip in iterations {start}..={t}")));
                    }
                }
            }
            report
        }
        Claim::LemmaPizza => {
            let mut report = report;
            for rec in &trace.records {
                report.windows_checked += 1;
                if rec.gossips.is_empty() && rec.virtual_gossips.is_empty() {
                    return Ok(report.fail(rec.t, "no gossip and no virtual gossip".into()));
                }
            }
            report
        }
        Claim::TreePeriodNMinus1 => {
            if !g.is_tree() {
                return Err(AnalysisError::ClaimPrecondition {
                    claim,
                    reason: "allowable graph is not a tree".into(),
                });
            }
            check_period(trace, report, n - 1)?
        }
        Claim::PeriodEdgesM => check_period(trace, report, g.edge_count())?,
        Claim::Contraction4OverN2 => {
            let rate = rate_bound(g);
            let m = rate.m;
            let v: Vec<Rational> = (0..=trace.len()).map(|t| complete_value(trace.x_at(t))).collect();
            let mut report = report;
            for t in 0..v.len().saturating_sub(m) {
                report.windows_checked += 1;
                if v[t + m] > &rate.rho * &v[t] {
                    let detail = format!(
                        "V({}) = {} exceeds (1 - 4/n^2) V({}) = {}",
                        t + m,
                        to_f64(&v[t + m]),
                        t,
                        to_f64(&(&rate.rho * &v[t]))
                    );
                    return Ok(report.fail(t, detail));
                }
            }
            if let Err(t) = rate.check_values(&v) {
                return Ok(report.fail(t, format!("V({t}) exceeds rho^floor(t/m) V(0)")));
            }
            report
        }
        Claim::Transmissions5nOver2 => {
            let cap = 2 * n + n / 2;
            let mut report = report;
            for rec in &trace.records {
                report.windows_checked += 1;
                if rec.transmissions != 2 * n + rec.acceptances.len() {
                    let detail = format!("transmissions {} != 2n + acceptances", rec.transmissions);
                    return Ok(report.fail(rec.t, detail));
                }
                if rec.transmissions > cap {
                    let detail = format!("{} transmissions exceed {cap}", rec.transmissions);
                    return Ok(report.fail(rec.t, detail));
                }
            }
            report
        }
    };
    Ok(report)
}

fn check_lemma_gossip(trace: &Trace, mut report: BoundReport) -> BoundReport {
    for rec in &trace.records {
        report.windows_checked += 1;
        let x = trace.x_before(rec.t);
        let tied = rec.preferred.iter().any(|(&i, &p)| x[i - 1] == x[p - 1]);
        let real_gossip = rec.gossips.iter().any(|&(a, b)| x[a - 1] != x[b - 1]);
        if !(tied || real_gossip) {
            return report.fail(rec.t, "no tie with a preferred neighbor and no gossip".into());
        }
    }
    report
}

/// Period claims: every full window of `width` iterations must complete all
/// rounds, and the reconstructed matrices over that window must be complete.
fn check_period(trace: &Trace, mut report: BoundReport, width: usize) -> Result<BoundReport, AnalysisError> {
    match rounds_in_every_window(trace, width, trace.len()) {
        Ok(windows) => report.windows_checked = windows,
        Err(miss) => {
            let detail = format!(
                "agent {} did not meet neighbor {} in iterations {}..{}",
                miss.agent,
                miss.neighbor,
                miss.window_start,
                miss.window_start + width
            );
            return Ok(report.fail(miss.window_start, detail));
        }
    }
    let seq = reconstruct_consistent_sequence(trace)?;
    if trace.len() >= width {
        for start in 0..=trace.len() - width {
            if !is_complete(&seq.matrices[start..start + width], &trace.graph) {
                let detail = format!("matrices {}..{} induce a disconnected graph", start, start + width);
                return Ok(report.fail(start, detail));
            }
        }
    }
    Ok(report)
}

/// Worst-case contraction `rho = 1 - 4/n²` per `m` iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    #[serde(with = "crate::value::serde_one")]
    pub rho: Rational,
    pub m: usize,
    /// `rho^(1/m)` as a float.
    pub per_step: f64,
}

impl RateBound {
    /// Checks `V(t) <= rho^floor(t/m) V(0)` on a sequence of indicator values.
    pub fn check_values(&self, v: &[Rational]) -> Result<(), usize> {
        let Some(v0) = v.first() else { return Ok(()) };
        let mut factor = Rational::one();
        for (t, vt) in v.iter().enumerate() {
            if t > 0 && t % self.m == 0 {
                factor = &factor * &self.rho;
            }
            if *vt > &factor * v0 {
                return Err(t);
            }
        }
        Ok(())
    }

    pub fn check_trace(&self, trace: &Trace) -> Result<(), usize> {
        let v: Vec<Rational> = (0..=trace.len()).map(|t| complete_value(trace.x_at(t))).collect();
        self.check_values(&v)
    }
}

pub fn rate_bound(g: &Graph) -> RateBound {
    let n = g.n();
    let m = g.edge_count();
    let rho = Rational::one() - Rational::new(4.into(), (n * n).into());
    let per_step = if rho.is_zero() { 0.0 } else { to_f64(&rho).powf(1.0 / m as f64) };
    RateBound { rho, m, per_step }
}

/// Runs one Protocol III iteration from `state` and reports whether some pair
/// joined by an edge of `sub` gossiped or virtually gossiped.
///
/// Requires `sub` to be a spanning subgraph of the allowable graph with at
/// least one edge, and every agent's `sub`-neighbors to sit ahead of its other
/// neighbors in its queue.
pub fn lib_property_check(state: &SimState, sub: &Graph) -> Result<bool, AnalysisError> {
    let g = state.graph();
    if !sub.is_subgraph_of(g) {
        return Err(AnalysisError::LibPrecondition("not a spanning subgraph of the allowable graph".into()));
    }
    if sub.edge_count() == 0 {
        return Err(AnalysisError::LibPrecondition("subgraph has no edges".into()));
    }
    for agent in state.agents() {
        let inside = sub.neighbors(agent.id);
        let mut seen_outside = false;
        for q in &agent.queue {
            let is_inside = inside.binary_search(q).is_ok();
            if is_inside && seen_outside {
                return Err(AnalysisError::LibPrecondition(format!(
                    "agent {} has a subgraph neighbor behind another neighbor",
                    agent.id
                )));
            }
            seen_outside |= !is_inside;
        }
    }
    let mut probe = SimState::new(
        g.clone(),
        Protocol::III,
        state.x(),
        &QueueInit::Explicit(state.queues()),
    )
    .expect("state already valid");
    let rec = probe.step();
    Ok(rec
        .gossips
        .iter()
        .chain(&rec.virtual_gossips)
        .any(|&(a, b)| sub.has_edge(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::value::{from_int, ratio};

    fn trace(kind: GraphKind, protocol: Protocol, x0: &[i64], iters: usize) -> Trace {
        let g = generate(&kind).unwrap();
        let x0 = x0.iter().map(|&v| from_int(v)).collect();
        let mut s = SimState::new(g, protocol, x0, &QueueInit::Seeded(1)).unwrap();
        for _ in 0..iters {
            s.step();
        }
        s.into_trace()
    }

    #[test]
    fn rate_bound_values() {
        let r = rate_bound(&generate(&GraphKind::Path { n: 3 }).unwrap());
        assert_eq!((r.rho.clone(), r.m), (ratio(5, 9), 2));
        assert!((r.per_step - 0.745_356).abs() < 1e-5);
        let r = rate_bound(&generate(&GraphKind::Complete { n: 4 }).unwrap());
        assert_eq!((r.rho.clone(), r.m), (ratio(3, 4), 6));
        assert!((r.per_step - 0.953_184).abs() < 1e-5);
        let r = rate_bound(&generate(&GraphKind::Path { n: 2 }).unwrap());
        assert_eq!((r.rho.clone(), r.m), (from_int(0), 1));
        let t = trace(GraphKind::Path { n: 2 }, Protocol::III, &[1, 0], 3);
        assert_eq!(complete_value(t.x_at(1)), from_int(0));
        assert!(r.check_trace(&t).is_ok());
    }

    #[test]
    fn claims_pass_on_their_protocols() {
        let t = trace(GraphKind::Path { n: 3 }, Protocol::III, &[4, 2, 0], 30);
        for claim in [Claim::LemmaPizza, Claim::PeriodEdgesM, Claim::Contraction4OverN2, Claim::Transmissions5nOver2] {
            let r = verify_bound(&t, claim).unwrap();
            assert!(r.pass, "{claim}: {:?}", r.counterexample);
            assert!(r.windows_checked > 0);
        }
        let t = trace(GraphKind::RandomTree { n: 10, seed: 3 }, Protocol::II, &[9, 0, 3, 7, 1, 1, 4, 8, 2, 5], 60);
        for claim in [Claim::LemmaGossip, Claim::LemmaDstep2d, Claim::TreePeriodNMinus1, Claim::Transmissions5nOver2] {
            let r = verify_bound(&t, claim).unwrap();
            assert!(r.pass, "{claim}: {:?}", r.counterexample);
        }
    }

    #[test]
    fn mismatched_protocol_is_an_error() {
        let t = trace(GraphKind::Path { n: 3 }, Protocol::II, &[4, 2, 0], 3);
        assert!(matches!(
            verify_bound(&t, Claim::LemmaPizza),
            Err(AnalysisError::ClaimProtocolMismatch { .. })
        ));
        let t = trace(GraphKind::Cycle { n: 4 }, Protocol::II, &[4, 2, 0, 1], 3);
        assert!(matches!(
            verify_bound(&t, Claim::TreePeriodNMinus1),
            Err(AnalysisError::ClaimPrecondition { .. })
        ));
    }

    #[test]
    fn failing_claim_yields_counterexample() {
        // Protocol I violates nothing here, but a tampered record does.
        let mut t = trace(GraphKind::Path { n: 4 }, Protocol::I, &[4, 2, 0, 1], 3);
        t.records[1].transmissions = 99;
        let r = verify_bound(&t, Claim::Transmissions5nOver2).unwrap();
        assert!(!r.pass);
        assert_eq!(r.counterexample.unwrap().t, 1);
    }

    #[test]
    fn report_json_shape() {
        let t = trace(GraphKind::Path { n: 2 }, Protocol::III, &[1, 0], 2);
        let r = verify_bound(&t, Claim::LemmaPizza).unwrap().with_seeds(vec![1]);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"claim":"lemma_pizza","protocol":"III","graph":{"n":2,"edges":[[1,2]]},"seeds":[1],"windows_checked":2,"pass":true}"#
        );
    }

    #[test]
    fn lib_check_contract() {
        let g = generate(&GraphKind::Path { n: 3 }).unwrap();
        let q = QueueInit::Explicit(vec![vec![2], vec![1, 3], vec![2]]);
        let s = SimState::new(g.clone(), Protocol::III, vec![from_int(4), from_int(2), from_int(0)], &q).unwrap();
        assert!(lib_property_check(&s, &g).unwrap());
        let one = Graph::new(3, [(1, 2)]).unwrap();
        assert!(lib_property_check(&s, &one).unwrap());
        let other = Graph::new(3, [(2, 3)]).unwrap();
        assert!(matches!(lib_property_check(&s, &other), Err(AnalysisError::LibPrecondition(_))));
        let empty = Graph::edgeless(3).unwrap();
        assert!(matches!(lib_property_check(&s, &empty), Err(AnalysisError::LibPrecondition(_))));
    }
}
