use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EngineError, SimState};
use crate::analysis::indicator::complete_value;
use crate::graph::Label;
use crate::value::{serde_one, Rational};

/// An exact repeat of the global state. The engine is deterministic, so a
/// repeat means the run cycles with this period forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    /// Iteration index at which the repeated state first appeared.
    pub cycle_start: usize,
    pub cycle_length: usize,
    /// Complete-graph indicator on the repeated state.
    #[serde(with = "serde_one")]
    pub v: Rational,
}

impl CycleReport {
    /// A repeat away from consensus: the run never converges.
    pub fn is_failure(&self) -> bool {
        self.v != Rational::from_integer(0.into())
    }
}

type StateKey = (Vec<Rational>, Vec<Vec<Label>>);

impl SimState {
    fn state_key(&self) -> StateKey {
        (self.x(), self.queues())
    }

    /// Steps up to `horizon` iterations, hashing the exact global state after
    /// each one, and reports the first repeat.
    pub fn detect_cycle(&mut self, horizon: usize) -> Result<Option<CycleReport>, EngineError> {
        if horizon == 0 {
            return Err(EngineError::InvalidHorizon);
        }
        let mut seen: HashMap<StateKey, usize> = HashMap::new();
        seen.insert(self.state_key(), self.t());
        for _ in 0..horizon {
            self.step();
            let key = self.state_key();
            let now = self.t();
            if let Some(&first) = seen.get(&key) {
                return Ok(Some(CycleReport {
                    cycle_start: first,
                    cycle_length: now - first,
                    v: complete_value(&key.0),
                }));
            }
            seen.insert(key, now);
        }
        Ok(None)
    }
}
