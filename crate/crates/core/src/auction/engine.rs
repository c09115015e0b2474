use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bundle::{build_bundle, BundleState};
use super::consensus::{consensus_round, BidMessage};
use super::network::NetworkModel;
use super::{AuctionError, NonConvergence};
use crate::instance::MissionInstance;
use crate::taskset::TaskSet;

/// Raw marginal bid from a scoring rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawBid {
    pub task: usize,
    pub value: f64,
    /// Index at which the task would enter the agent's path.
    pub position: usize,
}

/// A scoring rule plugged into the bundle/consensus engine.
pub trait Bidder {
    /// Marginal gain of adding each candidate to the agent's current bundle.
    fn marginal_bids(
        &mut self,
        agent: usize,
        bundle: &[usize],
        path: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<RawBid>, AuctionError>;

    /// Planner's predicted reward for executing the bundle.
    fn bundle_value(&mut self, agent: usize, bundle: &[usize], path: &[usize]) -> Result<f64, AuctionError>;

    /// Score evaluations performed so far.
    fn evaluations(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub wrapping: bool,
    pub max_rounds: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            wrapping: true,
            max_rounds: 1000,
        }
    }
}

/// Converged, conflict-free assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Per agent, tasks in claim order.
    pub assignment: Vec<Vec<usize>>,
    /// Per agent, tasks in execution order.
    pub paths: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
    pub per_agent_value: Vec<f64>,
    /// Last round in which any agent's allocation changed.
    pub rounds_to_converge: usize,
    /// Rounds simulated, including the quiet rounds that confirmed convergence.
    pub rounds_run: usize,
    pub score_evaluations: u64,
    pub network_diameter: usize,
}

impl AllocationResult {
    pub fn task_set(&self, agent: usize) -> TaskSet {
        self.assignment[agent].iter().collect()
    }

    /// Sum of per-agent predicted values minus the penalty for unassigned tasks.
    pub fn expected_reward(&self, instance: &MissionInstance) -> f64 {
        self.per_agent_value.iter().sum::<f64>() - instance.penalty * self.unassigned.len() as f64
    }

    /// Checks disjointness, capacities, and that every task is accounted for once.
    pub fn verify(&self, instance: &MissionInstance) -> Result<(), String> {
        let mut seen = vec![0usize; instance.task_count()];
        for (agent, tasks) in self.assignment.iter().enumerate() {
            let capacity = instance.agents[agent].capacity;
            if tasks.len() > capacity {
                return Err(format!(
                    "agent {agent} holds {} tasks, capacity {capacity}",
                    tasks.len()
                ));
            }
            for &j in tasks {
                seen[j] += 1;
            }
            let mut sorted_path = self.paths[agent].clone();
            let mut sorted_bundle = tasks.clone();
            sorted_path.sort_unstable();
            sorted_bundle.sort_unstable();
            if sorted_path != sorted_bundle {
                return Err(format!("agent {agent} path and bundle disagree"));
            }
        }
        if let Some(j) = seen.iter().position(|&c| c > 1) {
            return Err(format!("task {j} assigned {} times", seen[j]));
        }
        for &j in &self.unassigned {
            if seen[j] != 0 {
                return Err(format!("task {j} both assigned and unassigned"));
            }
            seen[j] = 1;
        }
        if let Some(j) = seen.iter().position(|&c| c == 0) {
            return Err(format!("task {j} missing"));
        }
        Ok(())
    }
}

/// Runs synchronous bundle/consensus rounds until no agent changes for
/// `diameter` consecutive rounds (at least one).
pub fn coordinate<B: Bidder + ?Sized>(
    instance: &MissionInstance,
    network: &NetworkModel,
    bidder: &mut B,
    config: &EngineConfig,
) -> Result<AllocationResult, AuctionError> {
    coordinate_observed(instance, network, bidder, config, |_, _| {})
}

/// [`coordinate`] with a callback after every round.
pub fn coordinate_observed<B, F>(
    instance: &MissionInstance,
    network: &NetworkModel,
    bidder: &mut B,
    config: &EngineConfig,
    mut observe: F,
) -> Result<AllocationResult, AuctionError>
where
    B: Bidder + ?Sized,
    F: FnMut(usize, &[BundleState]),
{
    let agents = instance.agent_count();
    let tasks = instance.task_count();
    if network.agents() != agents {
        return Err(AuctionError::Network(format!(
            "network has {} agents, instance has {agents}",
            network.agents()
        )));
    }
    let mut states: Vec<BundleState> = (0..agents).map(|i| BundleState::new(i, tasks, agents)).collect();
    let quiet_needed = network.diameter().max(1);
    let mut quiet = 0;
    let mut last_change = 0;
    // Per round, the tasks whose winner changed somewhere.
    let mut churn: Vec<BTreeSet<usize>> = Vec::new();

    for round in 1..=config.max_rounds {
        let before = states.clone();
        for (i, state) in states.iter_mut().enumerate() {
            build_bundle(state, bidder, instance.agents[i].capacity, config.wrapping)?;
        }
        let messages: Vec<BidMessage> = states
            .iter_mut()
            .map(|s| {
                s.timestamps[s.agent_id] = round as u64;
                BidMessage::from(&*s)
            })
            .collect();
        if log::log_enabled!(log::Level::Trace) {
            for msg in &messages {
                log::trace!(
                    "round {round} message {}",
                    serde_json::to_string(msg).unwrap_or_default()
                );
            }
        }
        for (i, state) in states.iter_mut().enumerate() {
            let inbox: Vec<BidMessage> = network.neighbors(i).iter().map(|&k| messages[k].clone()).collect();
            consensus_round(state, &inbox, round as u64);
        }
        observe(round, &states);

        let moved: BTreeSet<usize> = states
            .iter()
            .zip(&before)
            .flat_map(|(now, then)| {
                (0..tasks).filter(move |&j| {
                    now.winners[j] != then.winners[j] || now.winning_bids[j].to_bits() != then.winning_bids[j].to_bits()
                })
            })
            .collect();
        let changed = states.iter().zip(&before).any(|(a, b)| !a.same_allocation(b));
        churn.push(moved);
        if changed {
            last_change = round;
            quiet = 0;
        } else {
            quiet += 1;
            if quiet >= quiet_needed {
                return finish(instance, network, bidder, &states, last_change, round);
            }
        }
    }

    let window = churn.len().saturating_sub(2 * quiet_needed + 2);
    let oscillating: BTreeSet<usize> = churn[window..].iter().flatten().copied().collect();
    Err(AuctionError::NonConvergence(NonConvergence {
        rounds: config.max_rounds,
        oscillating_tasks: oscillating.into_iter().collect(),
    }))
}

fn finish<B: Bidder + ?Sized>(
    instance: &MissionInstance,
    network: &NetworkModel,
    bidder: &mut B,
    states: &[BundleState],
    last_change: usize,
    rounds_run: usize,
) -> Result<AllocationResult, AuctionError> {
    let mut per_agent_value = Vec::with_capacity(states.len());
    for s in states {
        per_agent_value.push(bidder.bundle_value(s.agent_id, &s.bundle, &s.path)?);
    }
    let assigned: BTreeSet<usize> = states.iter().flat_map(|s| s.bundle.iter().copied()).collect();
    let result = AllocationResult {
        assignment: states.iter().map(|s| s.bundle.clone()).collect(),
        paths: states.iter().map(|s| s.path.clone()).collect(),
        unassigned: (0..instance.task_count()).filter(|j| !assigned.contains(j)).collect(),
        per_agent_value,
        rounds_to_converge: last_change,
        rounds_run,
        score_evaluations: bidder.evaluations(),
        network_diameter: network.diameter(),
    };
    result.verify(instance).map_err(AuctionError::Inconsistent)?;
    Ok(result)
}
