//! Auction-based coordination for task-constrained multi-agent stochastic
//! planning.
//!
//! Each agent's planning problem is an MDP over the tasks it holds. The
//! value of that MDP, as a function of the task set, is the bid currency of
//! a consensus-based bundle auction. Baseline coordinators (deterministic
//! and sampling-based CBBA) and a Monte Carlo execution simulator sit
//! alongside for comparison.

pub mod auction;
pub mod baselines;
pub mod instance;
pub mod rng;
pub mod rollout;
pub mod taskset;
pub mod valuedp;

#[cfg(test)]
mod testutil;

pub use instance::{
    distance, generate_instance, parse_instance, serialize_instance, GenerationConfig, MissionInstance,
};
pub use taskset::TaskSet;
