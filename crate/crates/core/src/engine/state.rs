use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EngineError, IterationRecord, Protocol, Trace};
use crate::analysis::indicator::complete_value;
use crate::graph::{Graph, Label};
use crate::value::{midpoint, Rational};

/// One agent: its gossip variable and its neighbor queue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub id: Label,
    pub x: Rational,
    /// Always a permutation of the agent's neighbors; the front is the
    /// preferred neighbor.
    pub queue: VecDeque<Label>,
}

impl AgentState {
    pub fn preferred(&self) -> Label {
        *self.queue.front().expect("agents in a connected graph have neighbors")
    }

    fn position(&self, label: Label) -> usize {
        self.queue
            .iter()
            .position(|&q| q == label)
            .expect("label is a neighbor")
    }

    /// Moves `labels` to the back of the queue, keeping their current relative order.
    fn move_to_end(&mut self, labels: &[Label]) {
        if labels.is_empty() {
            return;
        }
        let (mut moved, kept): (Vec<Label>, Vec<Label>) =
            self.queue.iter().partition(|q| labels.contains(q));
        moved.dedup();
        self.queue = kept.into_iter().chain(moved).collect();
    }
}

/// How initial neighbor queues are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueInit {
    /// Ascending neighbor labels.
    Sorted,
    /// Each neighbor list shuffled by a ChaCha8 stream seeded with this value.
    Seeded(u64),
    /// One list per agent, in label order.
    Explicit(Vec<Vec<Label>>),
}

impl QueueInit {
    pub fn build(&self, g: &Graph) -> Result<Vec<Vec<Label>>, EngineError> {
        match self {
            QueueInit::Sorted => Ok(g.labels().map(|v| g.neighbors(v).to_vec()).collect()),
            QueueInit::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(g.labels()
                    .map(|v| {
                        let mut q = g.neighbors(v).to_vec();
                        q.shuffle(&mut rng);
                        q
                    })
                    .collect())
            }
            QueueInit::Explicit(queues) => {
                if queues.len() != g.n() {
                    return Err(EngineError::QueueCountMismatch { expected: g.n(), got: queues.len() });
                }
                for (idx, q) in queues.iter().enumerate() {
                    let agent = idx + 1;
                    let mut sorted = q.clone();
                    sorted.sort_unstable();
                    if sorted != g.neighbors(agent) {
                        return Err(EngineError::QueueNotPermutation { agent });
                    }
                }
                Ok(queues.clone())
            }
        }
    }
}

/// Why [`SimState::run`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// All values equal.
    Consensus,
    /// Complete-graph indicator fell below the requested fraction of its start value.
    Ratio,
    Budget,
}

/// Mutable simulation: current agent states plus the trace so far.
#[derive(Debug, Clone)]
pub struct SimState {
    agents: Vec<AgentState>,
    trace: Trace,
}

impl SimState {
    pub fn new(
        graph: Graph,
        protocol: Protocol,
        x0: Vec<Rational>,
        queues: &QueueInit,
    ) -> Result<Self, EngineError> {
        if x0.len() != graph.n() {
            return Err(EngineError::LengthMismatch { expected: graph.n(), got: x0.len() });
        }
        let queues = queues.build(&graph)?;
        let agents = x0
            .iter()
            .zip(&queues)
            .enumerate()
            .map(|(idx, (x, q))| AgentState {
                id: idx + 1,
                x: x.clone(),
                queue: q.iter().copied().collect(),
            })
            .collect();
        Ok(SimState {
            agents,
            trace: Trace { protocol, graph, x0, initial_queues: queues, records: Vec::new() },
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.trace.graph
    }

    pub fn protocol(&self) -> Protocol {
        self.trace.protocol
    }

    /// Iterations executed so far.
    pub fn t(&self) -> usize {
        self.trace.records.len()
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, i: Label) -> &AgentState {
        &self.agents[i - 1]
    }

    pub fn x(&self) -> Vec<Rational> {
        self.agents.iter().map(|a| a.x.clone()).collect()
    }

    pub fn queues(&self) -> Vec<Vec<Label>> {
        self.agents.iter().map(|a| a.queue.iter().copied().collect()).collect()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Executes one synchronized iteration and returns its record.
    pub fn step(&mut self) -> &IterationRecord {
        let n = self.agents.len();
        let protocol = self.trace.protocol;
        let x: Vec<Rational> = self.x();
        let value = |l: Label| &x[l - 1];
        let pref: Vec<Label> = self.agents.iter().map(AgentState::preferred).collect();

        // Steps 1 and 2: every agent learns its preferred neighbor's value and
        // the values of the agents that prefer it. Requests are implied by them.
        let mut incoming: Vec<Vec<Label>> = vec![Vec::new(); n];
        let mut requests = Vec::new();
        let mut is_requester = vec![false; n];
        for j in 1..=n {
            let target = pref[j - 1];
            if value(j) > value(target) {
                incoming[target - 1].push(j);
                requests.push((j, target));
                is_requester[j - 1] = true;
            }
        }

        // Step 3: acceptances.
        let mut partner: Vec<Option<Label>> = vec![None; n];
        let mut acceptances = Vec::new();
        for i in 1..=n {
            let senders = &incoming[i - 1];
            if senders.is_empty() {
                continue;
            }
            let willing = match protocol {
                Protocol::I => !is_requester[i - 1],
                Protocol::II | Protocol::III => value(i) < value(pref[i - 1]),
            };
            if !willing {
                continue;
            }
            let agent = &self.agents[i - 1];
            let chosen = *senders
                .iter()
                .min_by_key(|&&r| agent.position(r))
                .expect("non-empty");
            debug_assert!(partner[i - 1].is_none() && partner[chosen - 1].is_none());
            partner[i - 1] = Some(chosen);
            partner[chosen - 1] = Some(i);
            acceptances.push((i, chosen));
        }

        // Step 4: value and queue updates.
        let mut gossips = Vec::with_capacity(acceptances.len());
        for &(a, r) in &acceptances {
            let mid = midpoint(value(a), value(r));
            self.agents[a - 1].x = mid.clone();
            self.agents[r - 1].x = mid;
            gossips.push(if a < r { (a, r) } else { (r, a) });
        }
        gossips.sort_unstable();

        let mut virtual_gossips = Vec::new();
        for i in 1..=n {
            let agent = &mut self.agents[i - 1];
            let front = pref[i - 1];
            match protocol {
                Protocol::I | Protocol::II => match partner[i - 1] {
                    Some(j) => agent.move_to_end(&[j]),
                    None => {
                        if value(i) == value(front) {
                            agent.move_to_end(&[front]);
                            virtual_gossips.push((i, front));
                        }
                    }
                },
                Protocol::III => {
                    // Receivers: the preferred neighbor plus every agent preferring i.
                    let equal: Vec<Label> = agent
                        .queue
                        .iter()
                        .copied()
                        .filter(|&k| (k == front || pref[k - 1] == i) && value(k) == value(i))
                        .collect();
                    let mut block = equal.clone();
                    if let Some(j) = partner[i - 1] {
                        if !block.contains(&j) {
                            block.push(j);
                        }
                    }
                    agent.move_to_end(&block);
                    virtual_gossips.extend(equal.into_iter().map(|k| (i, k)));
                }
            }
        }

        acceptances.sort_unstable();
        let record = IterationRecord {
            t: self.t(),
            preferred: pref.iter().enumerate().map(|(idx, &p)| (idx + 1, p)).collect::<BTreeMap<_, _>>(),
            requests,
            transmissions: 2 * n + acceptances.len(),
            acceptances,
            gossips,
            virtual_gossips,
            x: self.x(),
        };
        self.trace.records.push(record);
        self.trace.records.last().expect("just pushed")
    }

    /// Steps until the budget is spent, exact consensus is reached, or the
    /// complete-graph indicator drops below `stop_ratio` times its initial value.
    pub fn run(&mut self, max_iters: usize, stop_ratio: Option<&Rational>) -> StopReason {
        let v0 = complete_value(&self.trace.x0);
        let mut executed = 0;
        loop {
            let v = complete_value(&self.x());
            if v == Rational::from_integer(0.into()) {
                return StopReason::Consensus;
            }
            if let Some(ratio) = stop_ratio {
                if v < ratio * &v0 {
                    return StopReason::Ratio;
                }
            }
            if executed >= max_iters {
                return StopReason::Budget;
            }
            self.step();
            executed += 1;
        }
    }

    /// Preferred-neighbor chain from `i` up to and including the first
    /// repeated label.
    pub fn queue_leaders(&self, i: Label) -> Result<Vec<Label>, EngineError> {
        if i == 0 || i > self.agents.len() {
            return Err(EngineError::UnknownAgent(i));
        }
        let mut chain = vec![i];
        let mut seen = vec![false; self.agents.len()];
        seen[i - 1] = true;
        loop {
            let next = self.agents[*chain.last().expect("non-empty") - 1].preferred();
            chain.push(next);
            if seen[next - 1] {
                return Ok(chain);
            }
            seen[next - 1] = true;
        }
    }
}
