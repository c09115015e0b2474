use serde::{Deserialize, Serialize};

use super::{AuctionError, Bidder};

/// One agent's view of the auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleState {
    pub agent_id: usize,
    /// Tasks in the order they were claimed.
    pub bundle: Vec<usize>,
    /// Tasks in intended execution order.
    pub path: Vec<usize>,
    /// Best known bid per task (`y`).
    pub winning_bids: Vec<f64>,
    /// Best known bidder per task (`z`).
    pub winners: Vec<Option<usize>>,
    /// Round of the latest information received about each agent.
    pub timestamps: Vec<u64>,
}

impl BundleState {
    pub fn new(agent_id: usize, tasks: usize, agents: usize) -> Self {
        BundleState {
            agent_id,
            bundle: Vec::new(),
            path: Vec::new(),
            winning_bids: vec![0.0; tasks],
            winners: vec![None; tasks],
            timestamps: vec![0; agents],
        }
    }

    pub fn task_count(&self) -> usize {
        self.winning_bids.len()
    }

    /// Standing bids of the bundle, in claim order.
    pub fn bundle_bids(&self) -> Vec<f64> {
        self.bundle.iter().map(|&j| self.winning_bids[j]).collect()
    }

    /// Same bundle, path, bids and winners (timestamps ignored).
    pub fn same_allocation(&self, other: &BundleState) -> bool {
        self.bundle == other.bundle
            && self.path == other.path
            && self.winners == other.winners
            && self
                .winning_bids
                .iter()
                .zip(&other.winning_bids)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// A candidate task with its raw and shared (wrapped) marginal bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub agent_id: usize,
    pub task_id: usize,
    /// Marginal gain `c_ij`.
    pub value: f64,
    /// Bid actually shared, `c'_ij`.
    pub wrapped_value: f64,
    /// Path insertion index.
    pub position: usize,
    /// Whether the shared bid beats the current winner (`h_ij`).
    pub eligible: bool,
}

/// Clamps a new bid so it never exceeds a bid already in the bundle, which
/// keeps shared bids diminishing along the bundle.
pub fn wrap_bid(raw: f64, bundle_bids: &[f64]) -> f64 {
    bundle_bids.iter().fold(raw, |acc, &y| acc.min(y))
}

/// Whether `(bid, bidder)` beats the standing `(y, winner)`; equal bids go
/// to the lower agent id.
pub fn outbids(bid: f64, bidder: usize, y: f64, winner: Option<usize>) -> bool {
    match winner {
        None => bid > y,
        Some(w) => bid > y || (bid == y && bidder < w),
    }
}

/// Bids for every task not yet in the agent's bundle, ascending task id.
pub fn compute_bids<B: Bidder + ?Sized>(
    state: &BundleState,
    bidder: &mut B,
    wrapping: bool,
) -> Result<Vec<Bid>, AuctionError> {
    let candidates: Vec<usize> = (0..state.task_count()).filter(|j| !state.bundle.contains(j)).collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let raw = bidder.marginal_bids(state.agent_id, &state.bundle, &state.path, &candidates)?;
    let standing = state.bundle_bids();
    Ok(raw
        .into_iter()
        .map(|r| {
            let wrapped_value = if wrapping {
                wrap_bid(r.value, &standing)
            } else {
                r.value
            };
            Bid {
                agent_id: state.agent_id,
                task_id: r.task,
                value: r.value,
                wrapped_value,
                position: r.position,
                eligible: outbids(
                    wrapped_value,
                    state.agent_id,
                    state.winning_bids[r.task],
                    state.winners[r.task],
                ),
            }
        })
        .collect())
}

/// Greedy bundle growth: repeatedly claim the best eligible task until the
/// bundle is full, nothing is eligible, or the best bid is not positive.
/// Returns whether anything was added.
pub fn build_bundle<B: Bidder + ?Sized>(
    state: &mut BundleState,
    bidder: &mut B,
    capacity: usize,
    wrapping: bool,
) -> Result<bool, AuctionError> {
    let mut changed = false;
    while state.bundle.len() < capacity {
        let bids = compute_bids(state, bidder, wrapping)?;
        let mut best: Option<Bid> = None;
        for bid in bids.into_iter().filter(|b| b.eligible && b.wrapped_value > 0.0) {
            if best.is_none_or(|b| bid.wrapped_value > b.wrapped_value) {
                best = Some(bid);
            }
        }
        let Some(best) = best else { break };
        state.bundle.push(best.task_id);
        state.path.insert(best.position.min(state.path.len()), best.task_id);
        state.winning_bids[best.task_id] = best.wrapped_value;
        state.winners[best.task_id] = Some(state.agent_id);
        changed = true;
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_examples() {
        assert_eq!(wrap_bid(5.0, &[7.0, 6.0]), 5.0);
        assert_eq!(wrap_bid(8.0, &[7.0, 6.0]), 6.0);
        assert_eq!(wrap_bid(8.0, &[]), 8.0);
    }

    #[test]
    fn tie_goes_to_lower_id() {
        assert!(outbids(2.0, 0, 2.0, Some(2)));
        assert!(!outbids(2.0, 2, 2.0, Some(0)));
        assert!(!outbids(0.0, 0, 0.0, None));
        assert!(outbids(0.5, 3, 0.0, None));
    }
}
