//! Indicator functions, round tracking and the runtime checks for the
//! convergence guarantees.

pub mod bounds;
pub mod indicator;
pub mod rounds;

use thiserror::Error;

use crate::engine::Protocol;
use crate::graph::GraphError;
use crate::matrices::MatrixError;

pub use bounds::{lib_property_check, rate_bound, verify_bound, BoundReport, Claim, Counterexample, RateBound};
pub use indicator::{
    check_gossip_decrease, complete_value, contain_witness, distance_sum_nonincreasing, ContainWitness,
    IndicatorSpec,
};
pub use rounds::{rounds_in_every_window, track_rounds, MissedRound, RoundTracker};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("invalid indicator pair set: {0}")]
    Spec(GraphError),
    #[error("claim {claim} is stated for Protocol {expected}, trace is Protocol {got}")]
    ClaimProtocolMismatch { claim: Claim, expected: Protocol, got: Protocol },
    #[error("claim {claim} does not apply: {reason}")]
    ClaimPrecondition { claim: Claim, reason: String },
    #[error("unknown claim {0:?}")]
    UnknownClaim(String),
    #[error("subgraph precondition violated: {0}")]
    LibPrecondition(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}
