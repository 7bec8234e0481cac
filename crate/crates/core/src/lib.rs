//! Deterministic request-based gossip for distributed averaging.
//!
//! Agents on an allowable gossip graph repeatedly pair up with a neighbor and
//! both move to the midpoint of their values. Pairing is driven by requests to
//! the neighbor at the front of each agent's neighbor queue, and queue rotation
//! rules keep the process free of deadlocks. Values are exact rationals so
//! every protocol branch on equality is reproducible.
//!
//! - [`graph`]: allowable graphs, generators and structural metrics.
//! - [`engine`]: the synchronized Protocol I/II/III step machine and traces.
//! - [`matrices`]: primitive gossip matrices and consistent sequences.
//! - [`analysis`]: indicator functions, rounds and checks of the guarantees.
//! - [`harness`]: experiment configs, batch runs, searches and comparisons.

pub mod analysis;
pub mod engine;
pub mod graph;
pub mod harness;
pub mod matrices;
pub mod value;

pub use engine::{IterationRecord, Protocol, QueueInit, SimState, Trace};
pub use graph::{Graph, GraphKind, Label};
pub use value::Rational;
