//! Value-function auction.
//!
//! Agents bid the marginal gain in their own MDP value,
//! `V(b ∪ {j}) − V(b)`, evaluated at the mission start state. Because `V`
//! is indexed by the task *set*, bids do not depend on the order in which
//! the bundle was built and no insertion search is needed. Conflicts are
//! resolved by CBBA consensus over a synchronous network; shared bids are
//! wrapped so they never exceed earlier bundle bids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod bundle;
mod consensus;
mod engine;
mod network;

pub use bundle::{build_bundle, compute_bids, outbids, wrap_bid, Bid, BundleState};
pub use consensus::{consensus_round, BidMessage, ConsensusOutcome, MESSAGE_VERSION};
pub use engine::{coordinate, coordinate_observed, AllocationResult, Bidder, EngineConfig, RawBid};
pub use network::{NetworkModel, Topology};

use crate::instance::MissionInstance;
use crate::taskset::TaskSet;
use crate::valuedp::{DpError, SetValueOracle};

/// Diagnostic for a run that hit its round limit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonConvergence {
    pub rounds: usize,
    /// Tasks whose winner kept changing near the end of the run.
    pub oscillating_tasks: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("no convergence after {} rounds; oscillating tasks {:?}", .0.rounds, .0.oscillating_tasks)]
    NonConvergence(NonConvergence),
    #[error("network: {0}")]
    Network(String),
    #[error("value solver: {0}")]
    Value(#[from] DpError),
    #[error("inconsistent allocation: {0}")]
    Inconsistent(String),
}

/// Bids from exact MDP values.
pub struct MdpBidder<'a> {
    oracle: &'a SetValueOracle,
    evaluations: u64,
}

impl<'a> MdpBidder<'a> {
    pub fn new(oracle: &'a SetValueOracle) -> Self {
        MdpBidder { oracle, evaluations: 0 }
    }
}

impl Bidder for MdpBidder<'_> {
    fn marginal_bids(
        &mut self,
        agent: usize,
        bundle: &[usize],
        path: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<RawBid>, AuctionError> {
        let held: TaskSet = bundle.iter().collect();
        let base = self.oracle.value(agent, held)?;
        candidates
            .iter()
            .map(|&task| {
                self.evaluations += 1;
                let with = self.oracle.value(agent, held.with(task))?;
                Ok(RawBid {
                    task,
                    value: with - base,
                    position: path.len(),
                })
            })
            .collect()
    }

    fn bundle_value(&mut self, agent: usize, bundle: &[usize], _path: &[usize]) -> Result<f64, AuctionError> {
        Ok(self.oracle.value(agent, bundle.iter().collect())?)
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// The proposed coordinator: MDP-value bids over CBBA consensus.
pub fn run_auction(
    instance: &MissionInstance,
    network: &NetworkModel,
    oracle: &SetValueOracle,
    wrapping: bool,
    max_rounds: usize,
) -> Result<AllocationResult, AuctionError> {
    let mut bidder = MdpBidder::new(oracle);
    coordinate(instance, network, &mut bidder, &EngineConfig { wrapping, max_rounds })
}

#[cfg(test)]
mod tests;
