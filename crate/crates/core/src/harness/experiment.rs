use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use super::HarnessError;
use crate::analysis::{complete_value, verify_bound, BoundReport, Claim};
use crate::engine::{Protocol, QueueInit, SimState, StopReason, Trace};
use crate::graph::{Graph, Label};
use crate::matrices::reconstruct_consistent_sequence;
use crate::value::{serde_vec, to_f64, Rational};

/// Initial conditions of a run; together with `trace.jsonl` this rebuilds the
/// full trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSetup {
    pub protocol: Protocol,
    pub graph: Graph,
    #[serde(with = "serde_vec")]
    pub x0: Vec<Rational>,
    pub initial_queues: Vec<Vec<Label>>,
}

impl RunSetup {
    pub fn of(trace: &Trace) -> Self {
        RunSetup {
            protocol: trace.protocol,
            graph: trace.graph.clone(),
            x0: trace.x0.clone(),
            initial_queues: trace.initial_queues.clone(),
        }
    }

    pub fn load_trace(&self, jsonl: &str) -> Result<Trace, HarnessError> {
        let mut trace = Trace::from_jsonl(self.protocol, self.graph.clone(), self.x0.clone(), jsonl.as_bytes())?;
        trace.initial_queues = self.initial_queues.clone();
        Ok(trace)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trace: Trace,
    pub stop_reason: StopReason,
    /// Error text when the reconstructed matrices disagree with the trace.
    pub consistency_error: Option<String>,
    pub reports: Vec<BoundReport>,
}

impl ExperimentOutcome {
    pub fn all_pass(&self) -> bool {
        self.consistency_error.is_none() && self.reports.iter().all(|r| r.pass)
    }
}

/// `reports.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub protocol: Protocol,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub v_initial: f64,
    pub v_final: f64,
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistency_error: Option<String>,
    pub all_pass: bool,
    pub reports: Vec<BoundReport>,
}

impl Experiment {
    pub fn simulate(&self) -> (Trace, StopReason) {
        let mut state = SimState::new(
            self.graph.clone(),
            self.protocol,
            self.x0.clone(),
            &QueueInit::Explicit(self.queues.clone()),
        )
        .expect("validated config");
        let reason = state.run(self.max_iters, self.stop_ratio.as_ref());
        (state.into_trace(), reason)
    }
}

/// Checks the matrix reconstruction and runs each claim on `trace`.
pub fn check_trace(trace: &Trace, claims: &[Claim]) -> Result<(Option<String>, Vec<BoundReport>), HarnessError> {
    let consistency_error = reconstruct_consistent_sequence(trace).err().map(|e| e.to_string());
    let reports = claims
        .iter()
        .map(|&c| verify_bound(trace, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((consistency_error, reports))
}

/// Validates, simulates, checks and, when `out_dir` is set, writes
/// `trace.jsonl`, `metrics.csv`, `setup.json` and `reports.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let exp = cfg.validate()?;
    let (trace, stop_reason) = exp.simulate();
    let (consistency_error, reports) = check_trace(&trace, &exp.claims)?;
    let outcome = ExperimentOutcome { trace, stop_reason, consistency_error, reports };
    if let Some(dir) = &exp.out_dir {
        write_outputs(dir, cfg, &outcome)?;
    }
    Ok(outcome)
}

/// Runs configs concurrently. Nothing is written until every run finished;
/// outputs then go to each config's own directory in input order.
pub fn run_batch(cfgs: &[ExperimentConfig]) -> Vec<Result<ExperimentOutcome, HarnessError>> {
    let results: Vec<Result<ExperimentOutcome, HarnessError>> = cfgs
        .par_iter()
        .map(|cfg| {
            let exp = cfg.validate()?;
            let (trace, stop_reason) = exp.simulate();
            let (consistency_error, reports) = check_trace(&trace, &exp.claims)?;
            Ok(ExperimentOutcome { trace, stop_reason, consistency_error, reports })
        })
        .collect();
    results
        .into_iter()
        .zip(cfgs)
        .map(|(res, cfg)| {
            let outcome = res?;
            if let Some(dir) = &cfg.out_dir {
                write_outputs(dir, cfg, &outcome)?;
            }
            Ok(outcome)
        })
        .collect()
}

pub fn summarize(cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> RunSummary {
    let trace = &outcome.trace;
    RunSummary {
        config: cfg.clone(),
        protocol: trace.protocol,
        iterations: trace.len(),
        stop_reason: outcome.stop_reason,
        v_initial: to_f64(&complete_value(&trace.x0)),
        v_final: to_f64(&complete_value(trace.x_at(trace.len()))),
        consistent: outcome.consistency_error.is_none(),
        consistency_error: outcome.consistency_error.clone(),
        all_pass: outcome.all_pass(),
        reports: outcome.reports.clone(),
    }
}

/// One row per time step, starting with the initial state.
pub fn metrics_csv(trace: &Trace) -> String {
    let mut out = String::from("t,V,gossips,virtual_gossips,transmissions\n");
    let _ = writeln!(out, "0,{},0,0,0", to_f64(&complete_value(&trace.x0)));
    for rec in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rec.t + 1,
            to_f64(&complete_value(&rec.x)),
            rec.gossips.len(),
            rec.virtual_gossips.len(),
            rec.transmissions
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut jsonl = Vec::new();
    outcome.trace.write_jsonl(&mut jsonl).expect("writing to memory");
    write_file(&dir.join("trace.jsonl"), &String::from_utf8(jsonl).expect("JSON is UTF-8"))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&outcome.trace))?;
    let setup = serde_json::to_string_pretty(&RunSetup::of(&outcome.trace)).expect("setup serializes");
    write_file(&dir.join("setup.json"), &(setup + "\n"))?;
    let summary = serde_json::to_string_pretty(&summarize(cfg, outcome)).expect("summary serializes");
    write_file(&dir.join("reports.json"), &(summary + "\n"))
}
