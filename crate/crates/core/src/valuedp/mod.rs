//! Exact per-agent value functions over task subsets.
//!
//! [`solve_value`] runs backward induction over (remaining subset, location,
//! time bin) with quadrature over the stochastic flight speed. The result is
//! a [`ValueTable`] giving `V(s; S)` and the optimal policy for every
//! subset `S` of the allocated tasks. [`deterministic_route_reward`] is the
//! same recursion with travel times fixed by a [`Scenario`].

use thiserror::Error;

mod grid;
mod oracle;
mod quadrature;
mod route;
mod scenario;
mod table;

pub use grid::TimeGrid;
pub use oracle::SetValueOracle;
pub use quadrature::{build_quadrature, QuadNode, QuadratureRule, DEFAULT_NODE_COUNT, MAX_NODE_COUNT};
pub use route::{deterministic_route_reward, RouteTiming};
pub use scenario::{Scenario, TruncatedNormal};
pub use table::{solve_value, Action, AgentState, ValueTable, DEFAULT_GRID_STEP, MAX_ALLOCATED};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("grid step must be finite and > 0, got {0}")]
    InvalidGridStep(f64),
    #[error("horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),
    #[error("{count} allocated tasks exceeds the solver cap of {cap}")]
    TooManyTasks { count: usize, cap: usize },
    #[error("unknown task {0}")]
    UnknownTask(usize),
    #[error("state out of range: {0}")]
    StateOutOfRange(String),
    #[error("illegal action: {0}")]
    InvalidAction(String),
}
