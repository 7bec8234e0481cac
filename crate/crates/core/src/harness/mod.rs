//! Experiment configs, batch runs, the Protocol I failure search and the
//! Protocol II vs III comparison.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod search;

use std::path::Path;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::engine::EngineError;
use crate::matrices::MatrixError;

pub use compare::{compare_protocols, comparison_report, CompareConfig, ComparisonReport, ProtocolSummary};
pub use config::{Experiment, ExperimentConfig, GraphSource, ValueSource};
pub use experiment::{
    check_trace, metrics_csv, run_batch, run_experiment, summarize, write_outputs, ExperimentOutcome, RunSetup,
    RunSummary,
};
pub use search::{instance_count, search_protocol1_failure, FailureCertificate, SearchSpace};

/// A config problem, tagged with the config field it concerns.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}
