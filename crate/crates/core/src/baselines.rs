//! Comparison coordinators: CBBA with best-insertion path scores, and its
//! sampling-based robust variant.
//!
//! Both score a task by inserting it into the agent's current path at every
//! position, keeping the existing order fixed, and bidding the best gain.
//! The deterministic variant replays paths at mean speeds; the robust one
//! averages over a fixed set of sampled scenarios per agent, so every
//! insertion position and every round sees the same draws.

use serde::{Deserialize, Serialize};

use crate::auction::{coordinate, AllocationResult, AuctionError, Bidder, EngineConfig, NetworkModel, RawBid};
use crate::instance::{distance, AgentSpec, MissionInstance};
use crate::rng::{derive_seed, stream_rng};
use crate::valuedp::Scenario;

const ROBUST_STREAM: u64 = 0x5CB5;

/// What happened to each task of a path replayed under one scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub reward: f64,
    pub served: Vec<usize>,
    /// Reached late, or never reached before the horizon.
    pub failed: Vec<usize>,
}

/// Replays `path` in order. Late tasks are passed through at zero reward;
/// once the clock is past the horizon the rest of the path fails.
pub fn trace_path(instance: &MissionInstance, agent: &AgentSpec, path: &[usize], scenario: &Scenario) -> PathOutcome {
    let mut out = PathOutcome::default();
    let mut t = 0.0;
    let mut at = 0usize;
    let mut here = agent.start;
    for (step, &j) in path.iter().enumerate() {
        if t > instance.horizon {
            out.failed.extend_from_slice(&path[step..]);
            break;
        }
        let task = &instance.tasks[j];
        let arrival = t + distance(here, task.location) / scenario.speed(at, j + 1);
        if arrival <= task.due_time {
            out.reward += task.price;
            out.served.push(j);
            t = arrival.max(task.ready_time) + task.service_duration;
        } else {
            out.failed.push(j);
            t = arrival;
        }
        at = j + 1;
        here = task.location;
    }
    out
}

/// Reward `S` of executing `path` in order under `scenario`.
pub fn path_reward(instance: &MissionInstance, agent: &AgentSpec, path: &[usize], scenario: &Scenario) -> f64 {
    trace_path(instance, agent, path, scenario).reward
}

/// A path with its mean-speed score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub path: Vec<usize>,
    pub score: f64,
}

impl PathScore {
    pub fn evaluate(instance: &MissionInstance, agent: &AgentSpec, path: Vec<usize>) -> Self {
        let score = path_reward(instance, agent, &path, &Scenario::mean(instance));
        PathScore { path, score }
    }
}

fn inserted(path: &[usize], position: usize, j: usize) -> Vec<usize> {
    let mut p = Vec::with_capacity(path.len() + 1);
    p.extend_from_slice(&path[..position]);
    p.push(j);
    p.extend_from_slice(&path[position..]);
    p
}

/// Best insertion of `j` into `path` at mean speeds: `(marginal gain, position)`.
/// Adds `|path| + 1` to `evaluations`. Ties keep the earliest position.
pub fn cbba_insertion_bid(
    instance: &MissionInstance,
    agent: &AgentSpec,
    path: &[usize],
    j: usize,
    evaluations: &mut u64,
) -> (f64, usize) {
    let mean = Scenario::mean(instance);
    let base = path_reward(instance, agent, path, &mean);
    let mut best = (f64::NEG_INFINITY, 0);
    for position in 0..=path.len() {
        *evaluations += 1;
        let gain = path_reward(instance, agent, &inserted(path, position, j), &mean) - base;
        if gain > best.0 {
            best = (gain, position);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustConfig {
    pub sample_count: usize,
    pub seed: u64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig {
            sample_count: 1000,
            seed: 0,
        }
    }
}

/// The scenarios one agent scores against, drawn once.
#[derive(Debug, Clone)]
pub struct ScenarioSample {
    scenarios: Vec<Scenario>,
}

impl ScenarioSample {
    pub fn draw(instance: &MissionInstance, agent: usize, cfg: &RobustConfig) -> Self {
        assert!(cfg.sample_count >= 1, "robust sampling needs at least one scenario");
        let mut rng = stream_rng(derive_seed(cfg.seed, &[agent as u64]), ROBUST_STREAM);
        ScenarioSample {
            scenarios: (0..cfg.sample_count)
                .map(|_| Scenario::sample(instance, &mut rng))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Sample mean of the path reward. Written as the first draw plus the
    /// mean deviation, so identical draws reproduce it bit for bit.
    pub fn mean_reward(&self, instance: &MissionInstance, agent: &AgentSpec, path: &[usize]) -> f64 {
        let first = path_reward(instance, agent, path, &self.scenarios[0]);
        let deviation: f64 = self.scenarios[1..]
            .iter()
            .map(|s| path_reward(instance, agent, path, s) - first)
            .sum();
        first + deviation / self.scenarios.len() as f64
    }
}

/// Best insertion of `j` by sample-mean gain: `(marginal gain, position)`.
/// Adds `N · (|path| + 1)` to `evaluations`.
pub fn robust_insertion_bid(
    instance: &MissionInstance,
    agent: &AgentSpec,
    path: &[usize],
    j: usize,
    sample: &ScenarioSample,
    evaluations: &mut u64,
) -> (f64, usize) {
    let base = sample.mean_reward(instance, agent, path);
    let mut best = (f64::NEG_INFINITY, 0);
    for position in 0..=path.len() {
        *evaluations += sample.len() as u64;
        let gain = sample.mean_reward(instance, agent, &inserted(path, position, j)) - base;
        if gain > best.0 {
            best = (gain, position);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CbbaVariant {
    Deterministic,
    Robust(RobustConfig),
}

/// Path-score bidder for the engine.
pub struct PathBidder<'a> {
    instance: &'a MissionInstance,
    samples: Option<Vec<ScenarioSample>>,
    evaluations: u64,
}

impl<'a> PathBidder<'a> {
    pub fn new(instance: &'a MissionInstance, variant: CbbaVariant) -> Self {
        let samples = match variant {
            CbbaVariant::Deterministic => None,
            CbbaVariant::Robust(cfg) => Some(
                (0..instance.agent_count())
                    .map(|i| ScenarioSample::draw(instance, i, &cfg))
                    .collect(),
            ),
        };
        PathBidder {
            instance,
            samples,
            evaluations: 0,
        }
    }
}

impl Bidder for PathBidder<'_> {
    fn marginal_bids(
        &mut self,
        agent: usize,
        _bundle: &[usize],
        path: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<RawBid>, AuctionError> {
        let spec = &self.instance.agents[agent];
        Ok(candidates
            .iter()
            .map(|&task| {
                let (value, position) = match &self.samples {
                    None => cbba_insertion_bid(self.instance, spec, path, task, &mut self.evaluations),
                    Some(samples) => {
                        robust_insertion_bid(self.instance, spec, path, task, &samples[agent], &mut self.evaluations)
                    }
                };
                RawBid { task, value, position }
            })
            .collect())
    }

    fn bundle_value(&mut self, agent: usize, _bundle: &[usize], path: &[usize]) -> Result<f64, AuctionError> {
        let spec = &self.instance.agents[agent];
        Ok(match &self.samples {
            None => path_reward(self.instance, spec, path, &Scenario::mean(self.instance)),
            Some(samples) => samples[agent].mean_reward(self.instance, spec, path),
        })
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// CBBA with path-insertion scores over the shared consensus engine.
pub fn run_cbba(
    instance: &MissionInstance,
    network: &NetworkModel,
    variant: CbbaVariant,
    config: &EngineConfig,
) -> Result<AllocationResult, AuctionError> {
    let mut bidder = PathBidder::new(instance, variant);
    coordinate(instance, network, &mut bidder, config)
}
