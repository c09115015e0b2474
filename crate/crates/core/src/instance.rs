//! Stochastic drone-delivery mission model and seeded instance generation.
//!
//! A [`MissionInstance`] is the complete planning input: a depot, a list of
//! customer tasks with optional time windows, and a fleet of agents whose
//! flight speed is normally distributed. Instances serialize to a JSON
//! document (see the repository README for the schema).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

pub const DEFAULT_HORIZON: f64 = 480.0;
pub const DEFAULT_MEAN_SPEED: f64 = 1.0;
/// Candidate probabilities that a task carries a time window; one is drawn per instance.
pub const WINDOW_PROBABILITIES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const SERVICE_DURATION_RANGE: (f64, f64) = (10.0, 30.0);
pub const WINDOW_WIDTH_RANGE: (f64, f64) = (30.0, 90.0);
pub const AREA_SIZE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("invalid generation config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invariant violated at {field}: {reason}")]
    Invariant { field: String, reason: String },
}

fn invariant(field: impl Into<String>, reason: impl Into<String>) -> InstanceError {
    InstanceError::Invariant {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Planar point in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance in kilometres.
pub fn distance(a: Location, b: Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// A customer request. Times are minutes from mission start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub location: Location,
    pub price: f64,
    pub ready_time: f64,
    pub due_time: f64,
    pub service_duration: f64,
    pub windowed: bool,
}

/// Normal flight-speed distribution (km/min), truncated below at `truncation_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel {
    pub mean: f64,
    pub variance: f64,
    pub truncation_floor: f64,
}

impl SpeedModel {
    /// Model with the default floor of `0.1 * mean`.
    pub fn new(mean: f64, variance: f64) -> Self {
        SpeedModel {
            mean,
            variance,
            truncation_floor: 0.1 * mean,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn is_deterministic(&self) -> bool {
        self.variance == 0.0
    }

    fn validate(&self, field: &str) -> Result<(), InstanceError> {
        if !(self.mean.is_finite() && self.mean > 0.0) {
            return Err(invariant(format!("{field}.mean"), "must be finite and > 0"));
        }
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(invariant(format!("{field}.variance"), "must be finite and >= 0"));
        }
        if !(self.truncation_floor > 0.0 && self.truncation_floor < self.mean) {
            return Err(invariant(format!("{field}.truncation_floor"), "must lie in (0, mean)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: usize,
    pub start: Location,
    /// Maximum bundle size.
    pub capacity: usize,
    pub speed: SpeedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionInstance {
    pub horizon: f64,
    pub depot: Location,
    pub tasks: Vec<Task>,
    pub agents: Vec<AgentSpec>,
    pub penalty: f64,
    pub seed: u64,
}

impl MissionInstance {
    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Speed model of the shared environment. All agents fly through the
    /// same wind field, so they share one model.
    pub fn speed_model(&self) -> SpeedModel {
        self.agents
            .first()
            .map(|a| a.speed)
            .unwrap_or_else(|| SpeedModel::new(DEFAULT_MEAN_SPEED, 0.0))
    }

    /// Location by global index: 0 is the depot, `j + 1` is task `j`.
    pub fn location(&self, index: usize) -> Location {
        if index == 0 {
            self.depot
        } else {
            self.tasks[index - 1].location
        }
    }

    pub fn total_price(&self) -> f64 {
        self.tasks.iter().map(|t| t.price).sum()
    }

    /// Checks every type invariant; the first violation is reported with its field path.
    pub fn validate(&self) -> Result<(), InstanceError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invariant("horizon", "must be finite and > 0"));
        }
        if !self.depot.is_finite() {
            return Err(invariant("depot", "coordinates must be finite"));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(invariant("penalty", "must be finite and >= 0"));
        }
        for (idx, task) in self.tasks.iter().enumerate() {
            let field = |name: &str| format!("tasks[{idx}].{name}");
            if task.id != idx {
                return Err(invariant(field("id"), format!("expected {idx}, found {}", task.id)));
            }
            if !task.location.is_finite() {
                return Err(invariant(field("location"), "coordinates must be finite"));
            }
            if !(task.price.is_finite() && task.price >= 0.0) {
                return Err(invariant(field("price"), "must be finite and >= 0"));
            }
            if !(task.service_duration.is_finite() && task.service_duration >= 0.0) {
                return Err(invariant(field("service_duration"), "must be finite and >= 0"));
            }
            if !(task.ready_time.is_finite() && task.ready_time >= 0.0) {
                return Err(invariant(field("ready_time"), "must be finite and >= 0"));
            }
            if !task.due_time.is_finite() || task.due_time < task.ready_time {
                return Err(invariant(
                    field("due_time"),
                    format!("due_time {} precedes ready_time {}", task.due_time, task.ready_time),
                ));
            }
            if !task.windowed && (task.ready_time != 0.0 || task.due_time != self.horizon) {
                return Err(invariant(
                    field("windowed"),
                    "a task without a window must span [0, horizon]",
                ));
            }
        }
        if self.agents.is_empty() {
            return Err(invariant("agents", "at least one agent is required"));
        }
        let speed = self.agents[0].speed;
        for (idx, agent) in self.agents.iter().enumerate() {
            let field = |name: &str| format!("agents[{idx}].{name}");
            if agent.id != idx {
                return Err(invariant(field("id"), format!("expected {idx}, found {}", agent.id)));
            }
            if !agent.start.is_finite() {
                return Err(invariant(field("start"), "coordinates must be finite"));
            }
            if agent.capacity < 1 {
                return Err(invariant(field("capacity"), "must be >= 1"));
            }
            agent.speed.validate(&field("speed"))?;
            if agent.speed != speed {
                return Err(invariant(field("speed"), "all agents must share one speed model"));
            }
        }
        Ok(())
    }
}

/// Inputs to [`generate_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub n_tasks: usize,
    pub n_agents: usize,
    pub sigma_v_sq: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Per-agent bundle limit; defaults to `ceil(n_tasks / n_agents) + 1`.
    pub capacity: Option<usize>,
}

impl GenerationConfig {
    pub fn new(n_tasks: usize, n_agents: usize, sigma_v_sq: f64, seed: u64) -> Self {
        GenerationConfig {
            n_tasks,
            n_agents,
            sigma_v_sq,
            horizon: DEFAULT_HORIZON,
            seed,
            capacity: None,
        }
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn default_capacity(&self) -> usize {
        self.n_tasks.div_ceil(self.n_agents.max(1)) + 1
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let bad = |field, reason: &str| InstanceError::InvalidConfig {
            field,
            reason: reason.to_string(),
        };
        if self.n_agents < 1 {
            return Err(bad("n_agents", "must be >= 1"));
        }
        if !(self.sigma_v_sq.is_finite() && self.sigma_v_sq >= 0.0) {
            return Err(bad("sigma_v_sq", "must be finite and >= 0"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(bad("horizon", "must be finite and > 0"));
        }
        if self.capacity == Some(0) {
            return Err(bad("capacity", "must be >= 1"));
        }
        Ok(())
    }
}

/// Draws a random mission. Identical configs give identical instances.
pub fn generate_instance(cfg: &GenerationConfig) -> Result<MissionInstance, InstanceError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let horizon = cfg.horizon;
    let speed = SpeedModel::new(DEFAULT_MEAN_SPEED, cfg.sigma_v_sq);

    let depot = Location::new(rng.gen::<f64>() * AREA_SIZE, rng.gen::<f64>() * AREA_SIZE);
    let window_probability = *WINDOW_PROBABILITIES.choose(&mut rng).expect("non-empty");

    let mut tasks = Vec::with_capacity(cfg.n_tasks);
    for id in 0..cfg.n_tasks {
        let location = Location::new(rng.gen::<f64>() * AREA_SIZE, rng.gen::<f64>() * AREA_SIZE);
        let (lo, hi) = SERVICE_DURATION_RANGE;
        let service_duration = lo + rng.gen::<f64>() * (hi - lo);
        let windowed = rng.gen_bool(window_probability);
        // Fixed draw count per task keeps later tasks independent of earlier branches.
        let ready_u = rng.gen::<f64>();
        let width_u = rng.gen::<f64>();
        let (ready_time, due_time) = if windowed {
            let latest_ready = (horizon - distance(depot, location) / speed.mean - service_duration).max(0.0);
            let ready = ready_u * latest_ready;
            let (wlo, whi) = WINDOW_WIDTH_RANGE;
            (ready, ready + wlo + width_u * (whi - wlo))
        } else {
            (0.0, horizon)
        };
        tasks.push(Task {
            id,
            location,
            price: 1.0,
            ready_time,
            due_time,
            service_duration,
            windowed,
        });
    }

    let capacity = cfg.capacity.unwrap_or_else(|| cfg.default_capacity());
    let agents = (0..cfg.n_agents)
        .map(|id| AgentSpec {
            id,
            start: depot,
            capacity,
            speed,
        })
        .collect();

    Ok(MissionInstance {
        horizon,
        depot,
        tasks,
        agents,
        penalty: 1.0,
        seed: cfg.seed,
    })
}

pub fn serialize_instance(instance: &MissionInstance) -> String {
    serde_json::to_string_pretty(instance).expect("instance is always serializable")
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<MissionInstance, InstanceError> {
    let instance: MissionInstance = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    instance.validate()?;
    Ok(instance)
}
