//! Experiment orchestration and property suites for the stochauction
//! coordinators.

pub mod experiment;
pub mod properties;
