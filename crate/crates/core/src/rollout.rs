//! Monte Carlo execution of allocations under sampled travel speeds.
//!
//! Every method is rolled out against the same scenario in a given round,
//! so comparisons between methods are paired. Rewards are global: served
//! tasks earn their price and every failed or unassigned task costs the
//! penalty.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::trace_path;
use crate::instance::{distance, MissionInstance};
use crate::rng::{derive_seed, stream_rng};
use crate::taskset::TaskSet;
use crate::valuedp::{Action, AgentState, DpError, Scenario, ValueTable};

const SCENARIO_STREAM: u64 = 0x5CE4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RolloutError {
    #[error("task {0} is allocated to more than one agent")]
    Conflict(usize),
    #[error("expected {expected} agent policies, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("policy lookup: {0}")]
    Policy(#[from] DpError),
    #[error("rounds must be at least 1")]
    NoRounds,
}

/// How one agent executes its tasks.
#[derive(Debug, Clone)]
pub enum ExecutionPolicy {
    /// Re-queries the value table at every realized state. The table may
    /// cover a superset of `tasks`.
    Mdp { table: Arc<ValueTable>, tasks: TaskSet },
    /// Visits the tasks in the given order.
    FixedPath(Vec<usize>),
}

impl ExecutionPolicy {
    pub fn tasks(&self) -> TaskSet {
        match self {
            ExecutionPolicy::Mdp { tasks, .. } => *tasks,
            ExecutionPolicy::FixedPath(path) => path.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskOutcome {
    Served,
    Failed,
    Unassigned,
}

/// Result of one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutOutcome {
    pub outcomes: Vec<TaskOutcome>,
    pub reward: f64,
}

impl RolloutOutcome {
    pub fn served(&self) -> usize {
        self.outcomes.iter().filter(|&&o| o == TaskOutcome::Served).count()
    }
}

/// Draws the travel speeds for one rollout.
pub fn sample_scenario(instance: &MissionInstance, seed: u64) -> Scenario {
    Scenario::sample(instance, &mut stream_rng(seed, SCENARIO_STREAM))
}

/// Runs every agent's policy under `scenario` and scores the result.
pub fn execute(
    instance: &MissionInstance,
    policies: &[ExecutionPolicy],
    scenario: &Scenario,
) -> Result<RolloutOutcome, RolloutError> {
    if policies.len() != instance.agent_count() {
        return Err(RolloutError::AgentCount {
            expected: instance.agent_count(),
            got: policies.len(),
        });
    }
    let mut outcomes = vec![TaskOutcome::Unassigned; instance.task_count()];
    let mut claimed = TaskSet::empty();
    for policy in policies {
        let tasks = policy.tasks();
        if let Some(j) = tasks.intersection(claimed).iter().next() {
            return Err(RolloutError::Conflict(j));
        }
        claimed = claimed.union(tasks);
    }
    for (agent, policy) in policies.iter().enumerate() {
        match policy {
            ExecutionPolicy::FixedPath(path) => {
                let trace = trace_path(instance, &instance.agents[agent], path, scenario);
                for j in trace.served {
                    outcomes[j] = TaskOutcome::Served;
                }
                for j in trace.failed {
                    outcomes[j] = TaskOutcome::Failed;
                }
            }
            ExecutionPolicy::Mdp { table, tasks } => run_mdp(instance, table, *tasks, scenario, &mut outcomes)?,
        }
    }
    let reward = outcomes
        .iter()
        .zip(&instance.tasks)
        .map(|(o, task)| match o {
            TaskOutcome::Served => task.price,
            _ => -instance.penalty,
        })
        .sum();
    Ok(RolloutOutcome { outcomes, reward })
}

/// Exact realized times decide service; snapped times only index the table.
fn run_mdp(
    instance: &MissionInstance,
    table: &ValueTable,
    tasks: TaskSet,
    scenario: &Scenario,
    outcomes: &mut [TaskOutcome],
) -> Result<(), RolloutError> {
    let agent = &table.agent;
    let mut state = AgentState::start(tasks);
    let mut here = agent.start;
    while !state.remaining.is_empty() && table.grid().bin_at(state.time).is_some() {
        match table.next_action(&state)? {
            Action::Serve(j) => {
                let task = &instance.tasks[j];
                let arrival = state.time + distance(here, task.location) / scenario.speed(state.at, j + 1);
                if arrival <= task.due_time {
                    outcomes[j] = TaskOutcome::Served;
                    state.time = arrival.max(task.ready_time) + task.service_duration;
                } else {
                    outcomes[j] = TaskOutcome::Failed;
                    state.time = arrival;
                }
                state.at = j + 1;
                state.remaining.remove(j);
                here = task.location;
            }
            Action::Skip(j) => {
                outcomes[j] = TaskOutcome::Failed;
                state.remaining.remove(j);
            }
            Action::Finish => break,
        }
    }
    for j in state.remaining.iter() {
        outcomes[j] = TaskOutcome::Failed;
    }
    Ok(())
}

/// Per-task outcome counts over a set of rollouts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub served: u64,
    pub failed: u64,
    pub unassigned: u64,
}

/// Rollout statistics for one (instance, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutReport {
    pub instance_id: u64,
    pub method: String,
    pub expected_reward: f64,
    pub actual_reward_mean: f64,
    pub actual_reward_std: f64,
    pub finish_rate: f64,
    pub per_task: Vec<TaskCounts>,
    pub rollout_count: usize,
}

impl RolloutReport {
    pub fn served_total(&self) -> u64 {
        self.per_task.iter().map(|c| c.served).sum()
    }

    /// `|Γ| · (2 · finish_rate − 1)`, the mean reward when every price and
    /// the penalty are 1.
    pub fn unit_reward_identity(&self) -> f64 {
        self.per_task.len() as f64 * (2.0 * self.finish_rate - 1.0)
    }
}

/// A method's plan as handed to [`validate`].
#[derive(Debug, Clone)]
pub struct MethodPlan {
    pub method: String,
    /// The planner's own prediction of the global reward.
    pub expected_reward: f64,
    pub policies: Vec<ExecutionPolicy>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Scenario seed of round `round`; shared by all methods.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    derive_seed(seed, &[round as u64])
}

/// Rolls every plan out over `rounds` paired scenarios.
pub fn validate(
    instance: &MissionInstance,
    plans: &[MethodPlan],
    rounds: usize,
    seed: u64,
) -> Result<Vec<RolloutReport>, RolloutError> {
    if rounds == 0 {
        return Err(RolloutError::NoRounds);
    }
    let n = instance.task_count();
    let mut rewards = vec![Vec::with_capacity(rounds); plans.len()];
    let mut counts = vec![vec![TaskCounts::default(); n]; plans.len()];
    for round in 0..rounds {
        let scenario = sample_scenario(instance, round_seed(seed, round));
        for (m, plan) in plans.iter().enumerate() {
            let outcome = execute(instance, &plan.policies, &scenario)?;
            for (c, o) in counts[m].iter_mut().zip(&outcome.outcomes) {
                match o {
                    TaskOutcome::Served => c.served += 1,
                    TaskOutcome::Failed => c.failed += 1,
                    TaskOutcome::Unassigned => c.unassigned += 1,
                }
            }
            rewards[m].push(outcome.reward);
        }
    }
    Ok(plans
        .iter()
        .zip(rewards)
        .zip(counts)
        .map(|((plan, rewards), per_task)| {
            let mean = rewards.iter().copied().collect::<CompensatedSum>().total() / rounds as f64;
            let std = if rounds > 1 {
                let ss = rewards
                    .iter()
                    .map(|r| (r - mean).powi(2))
                    .collect::<CompensatedSum>()
                    .total();
                (ss / (rounds - 1) as f64).sqrt()
            } else {
                0.0
            };
            let served: u64 = per_task.iter().map(|c| c.served).sum();
            let finish_rate = if n == 0 {
                0.0
            } else {
                served as f64 / (n * rounds) as f64
            };
            RolloutReport {
                instance_id: instance.seed,
                method: plan.method.clone(),
                expected_reward: plan.expected_reward,
                actual_reward_mean: mean,
                actual_reward_std: std,
                finish_rate,
                per_task,
                rollout_count: rounds,
            }
        })
        .collect())
}
