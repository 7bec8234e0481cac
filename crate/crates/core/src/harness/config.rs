use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::analysis::Claim;
use crate::engine::{Protocol, QueueInit};
use crate::graph::{generate, Graph, GraphJson, GraphKind, Label};
use crate::value::{parse_rational, Rational};

/// Where the allowable graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphSource {
    /// Edge-list text or `{"n", "edges"}` JSON on disk.
    File(PathBuf),
    Generate(GraphKind),
    Inline(GraphJson),
}

/// Where the initial values come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueSource {
    /// One `num/den` or integer string per agent.
    Explicit(Vec<String>),
    /// Uniform integers in `lo..=hi` drawn from a ChaCha8 stream.
    Random { seed: u64, lo: i64, hi: i64 },
}

impl ValueSource {
    pub fn random(seed: u64, lo: i64, hi: i64) -> Self {
        ValueSource::Random { seed, lo, hi }
    }
}

/// Draws `n` integers in `lo..=hi`.
pub fn random_integers(n: usize, seed: u64, lo: i64, hi: i64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Rational::from_integer(rng.random_range(lo..=hi).into())).collect()
}

/// Serializable experiment description. Every random choice carries its seed,
/// so the same config always produces the same trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `"1"`, `"2"`, `"3"` or `"I"`, `"II"`, `"III"`.
    pub protocol: String,
    pub graph: GraphSource,
    pub x0: ValueSource,
    #[serde(default = "default_queues")]
    pub queues: QueueInit,
    pub max_iters: usize,
    /// `P/Q`: stop once the complete-graph indicator drops below this fraction
    /// of its start value.
    #[serde(default)]
    pub stop_ratio: Option<String>,
    #[serde(default)]
    pub claims: Vec<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_queues() -> QueueInit {
    QueueInit::Sorted
}

/// A config with every field parsed and cross-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub protocol: Protocol,
    pub graph: Graph,
    pub x0: Vec<Rational>,
    pub queues: Vec<Vec<Label>>,
    pub max_iters: usize,
    pub stop_ratio: Option<Rational>,
    pub claims: Vec<Claim>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let protocol: Protocol = self
            .protocol
            .parse()
            .map_err(|_| ConfigError::new("protocol", format!("unknown protocol {:?}, expected 1, 2 or 3", self.protocol)))?;
        let graph = load_graph(&self.graph)?;
        let x0 = resolve_values(&self.x0, graph.n())?;
        let queues = self
            .queues
            .build(&graph)
            .map_err(|e| ConfigError::new("queues", e.to_string()))?;
        let stop_ratio = self
            .stop_ratio
            .as_deref()
            .map(|s| {
                let r = parse_rational(s).map_err(|e| ConfigError::new("stop_ratio", e.to_string()))?;
                if r <= Rational::from_integer(0.into()) || r > Rational::from_integer(1.into()) {
                    return Err(ConfigError::new("stop_ratio", format!("{s} is not in (0, 1]")));
                }
                Ok(r)
            })
            .transpose()?;
        let claims = parse_claims(&self.claims, protocol, &graph)?;
        Ok(Experiment {
            protocol,
            graph,
            x0,
            queues,
            max_iters: self.max_iters,
            stop_ratio,
            claims,
            out_dir: self.out_dir.clone(),
        })
    }
}

pub fn load_graph(src: &GraphSource) -> Result<Graph, ConfigError> {
    match src {
        GraphSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("graph", format!("{}: {e}", path.display())))?;
            let g = Graph::parse_any(&text).map_err(|e| ConfigError::new("graph", format!("{}: {e}", path.display())))?;
            require_connected(g)
        }
        GraphSource::Generate(kind) => generate(kind).map_err(|e| ConfigError::new("graph", e.to_string())),
        GraphSource::Inline(json) => {
            let g = Graph::try_from(json.clone()).map_err(|e| ConfigError::new("graph", e.to_string()))?;
            require_connected(g)
        }
    }
}

fn require_connected(g: Graph) -> Result<Graph, ConfigError> {
    if g.is_connected() {
        Ok(g)
    } else {
        Err(ConfigError::new("graph", "allowable graph must be connected"))
    }
}

pub fn resolve_values(src: &ValueSource, n: usize) -> Result<Vec<Rational>, ConfigError> {
    match src {
        ValueSource::Explicit(items) => {
            if items.len() != n {
                return Err(ConfigError::new("x0", format!("{} values for {n} agents", items.len())));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, s)| parse_rational(s).map_err(|e| ConfigError::new(format!("x0[{}]", i + 1), e.to_string())))
                .collect()
        }
        &ValueSource::Random { seed, lo, hi } => {
            if lo > hi {
                return Err(ConfigError::new("x0", format!("empty range {lo}:{hi}")));
            }
            Ok(random_integers(n, seed, lo, hi))
        }
    }
}

pub fn parse_claims(names: &[String], protocol: Protocol, graph: &Graph) -> Result<Vec<Claim>, ConfigError> {
    names
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            let field = format!("claims[{idx}]");
            let claim: Claim = name.parse().map_err(|_| ConfigError::new(field.clone(), format!("unknown claim {name:?}")))?;
            if let Some(expected) = claim.protocol() {
                if expected != protocol {
                    return Err(ConfigError::new(
                        field,
                        format!("{claim} is checked on Protocol {expected} traces, not Protocol {protocol}"),
                    ));
                }
            }
            if claim == Claim::TreePeriodNMinus1 && !graph.is_tree() {
                return Err(ConfigError::new(field, format!("{claim} needs a tree")));
            }
            Ok(claim)
        })
        .collect()
}
