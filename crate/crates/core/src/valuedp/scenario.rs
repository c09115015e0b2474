use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::instance::{MissionInstance, SpeedModel};

/// One joint realization of flight speeds, one independent draw per ordered
/// pair of locations. Location indices are global: 0 is the depot and
/// `j + 1` is task `j`.
///
/// Each arc is flown at most once on any route, so per-arc independence is
/// what makes extending a task set add only fresh, independent variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    dim: usize,
    speeds: Vec<f64>,
}

impl Scenario {
    /// Every arc flies at `speed`.
    pub fn constant(dim: usize, speed: f64) -> Self {
        Scenario {
            dim,
            speeds: vec![speed; dim * dim],
        }
    }

    /// The mean-speed scenario of an instance.
    pub fn mean(instance: &MissionInstance) -> Self {
        Scenario::constant(instance.task_count() + 1, instance.speed_model().mean)
    }

    pub fn from_speeds(dim: usize, speeds: Vec<f64>) -> Self {
        assert_eq!(speeds.len(), dim * dim, "speed matrix must be dim x dim");
        Scenario { dim, speeds }
    }

    /// Draws every traversable arc (`from != to`, `to != depot`) from the
    /// truncated normal. Arcs into the depot are never flown and keep the mean.
    pub fn sample<R: Rng + ?Sized>(instance: &MissionInstance, rng: &mut R) -> Self {
        let model = instance.speed_model();
        let dim = instance.task_count() + 1;
        let mut scenario = Scenario::constant(dim, model.mean);
        let sampler = TruncatedNormal::new(model);
        for from in 0..dim {
            for to in 1..dim {
                if from != to {
                    scenario.speeds[from * dim + to] = sampler.sample(rng);
                }
            }
        }
        scenario
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn speed(&self, from: usize, to: usize) -> f64 {
        self.speeds[from * self.dim + to]
    }

    pub fn set_speed(&mut self, from: usize, to: usize, speed: f64) {
        self.speeds[from * self.dim + to] = speed;
    }
}

/// Normal speed conditioned on being at least the floor (rejection sampling).
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNormal {
    model: SpeedModel,
    normal: Option<Normal<f64>>,
}

impl TruncatedNormal {
    pub fn new(model: SpeedModel) -> Self {
        let normal = if model.is_deterministic() {
            None
        } else {
            Some(Normal::new(model.mean, model.std_dev()).expect("finite std dev"))
        };
        TruncatedNormal { model, normal }
    }
}

impl Distribution<f64> for TruncatedNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.normal {
            None => self.model.mean,
            Some(normal) => loop {
                let v = normal.sample(rng);
                if v >= self.model.truncation_floor {
                    return v;
                }
            },
        }
    }
}
