//! Synchronized request-based gossip engine.
//!
//! One call to [`SimState::step`] executes the four protocol steps for every
//! agent with a barrier between steps: both transmissions, acceptances, then
//! value and queue updates. Protocols differ only in the acceptance rule
//! (I versus II/III) and in how queues rotate on equal values (I/II versus III).

mod cycle;
mod record;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Label;

pub use cycle::CycleReport;
pub use record::{IterationRecord, Trace};
pub use state::{AgentState, QueueInit, SimState, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    /// Accepts only when the agent placed no request itself.
    I,
    /// Accepts only when strictly below its preferred neighbor.
    II,
    /// Protocol II acceptances with block rotation of every equal-valued receiver.
    III,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::I, Protocol::II, Protocol::III];

    pub fn number(self) -> u8 {
        match self {
            Protocol::I => 1,
            Protocol::II => 2,
            Protocol::III => 3,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Protocol::I => "I",
            Protocol::II => "II",
            Protocol::III => "III",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown protocol {0:?}; expected 1, 2, 3, I, II or III")]
pub struct ParseProtocolError(pub String);

impl FromStr for Protocol {
    type Err = ParseProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" | "I" => Ok(Protocol::I),
            "2" | "II" => Ok(Protocol::II),
            "3" | "III" => Ok(Protocol::III),
            _ => Err(ParseProtocolError(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("expected {expected} initial values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected {expected} queues, got {got}")]
    QueueCountMismatch { expected: usize, got: usize },
    #[error("queue of agent {agent} is not a permutation of its neighbors")]
    QueueNotPermutation { agent: Label },
    #[error("cycle detection horizon must be at least 1")]
    InvalidHorizon,
    #[error("label {0} is not an agent")]
    UnknownAgent(Label),
    #[error("malformed trace: {0}")]
    TraceFormat(String),
}
