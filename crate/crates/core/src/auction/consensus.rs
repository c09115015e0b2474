//! CBBA conflict resolution.
//!
//! Each round an agent receives the `(y, z, timestamps)` vectors of its
//! neighbors and, task by task, decides to *update* (adopt the sender's
//! bid and winner), *reset* (forget the task's winner), or *leave* its own
//! view. Staleness between conflicting third-party claims is settled by the
//! timestamps. Afterwards, if the agent was outbid on a bundle task, that
//! task and everything claimed after it are dropped, since later marginal
//! gains were computed on top of it.

use serde::{Deserialize, Serialize};

use super::bundle::{outbids, BundleState};

pub const MESSAGE_VERSION: u32 = 1;

/// What an agent shares with its neighbors each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidMessage {
    pub version: u32,
    pub sender: usize,
    pub winning_bids: Vec<f64>,
    pub winners: Vec<Option<usize>>,
    pub timestamps: Vec<u64>,
}

impl From<&BundleState> for BidMessage {
    fn from(state: &BundleState) -> Self {
        BidMessage {
            version: MESSAGE_VERSION,
            sender: state.agent_id,
            winning_bids: state.winning_bids.clone(),
            winners: state.winners.clone(),
            timestamps: state.timestamps.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsensusOutcome {
    /// Whether bundle, path, bids or winners changed.
    pub changed: bool,
    /// Senders whose messages were malformed and ignored.
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decision {
    Update,
    Reset,
    Leave,
}

/// Merges `inbox` (processed in the given order) into `state` at round `now`.
pub fn consensus_round(state: &mut BundleState, inbox: &[BidMessage], now: u64) -> ConsensusOutcome {
    let before = state.clone();
    let mut dropped = Vec::new();
    let tasks = state.task_count();
    let agents = state.timestamps.len();
    state.timestamps[state.agent_id] = now;

    for msg in inbox {
        let well_formed = msg.version == MESSAGE_VERSION
            && msg.sender < agents
            && msg.sender != state.agent_id
            && msg.winning_bids.len() == tasks
            && msg.winners.len() == tasks
            && msg.timestamps.len() == agents
            && msg.winners.iter().flatten().all(|&w| w < agents);
        if !well_formed {
            log::warn!("agent {} dropped malformed message from {}", state.agent_id, msg.sender);
            dropped.push(msg.sender);
            continue;
        }
        for task in 0..tasks {
            match decide(state, msg, task) {
                Decision::Update => {
                    state.winning_bids[task] = msg.winning_bids[task];
                    state.winners[task] = msg.winners[task];
                }
                Decision::Reset => {
                    state.winning_bids[task] = 0.0;
                    state.winners[task] = None;
                }
                Decision::Leave => {}
            }
        }
        for m in 0..agents {
            if m == msg.sender {
                state.timestamps[m] = now;
            } else if m != state.agent_id {
                state.timestamps[m] = state.timestamps[m].max(msg.timestamps[m]);
            }
        }
    }

    release_outbid_tasks(state);
    ConsensusOutcome {
        changed: !state.same_allocation(&before),
        dropped,
    }
}

/// The CBBA decision table for one task, receiver `i`, sender `k`.
#[rustfmt::skip]
#[allow(clippy::if_same_then_else)]
fn decide(state: &BundleState, msg: &BidMessage, task: usize) -> Decision {
    use Decision::*;
    let i = state.agent_id;
    let k = msg.sender;
    let (y_k, z_k) = (msg.winning_bids[task], msg.winners[task]);
    let (y_i, z_i) = (state.winning_bids[task], state.winners[task]);
    let newer = |m: usize| msg.timestamps[m] > state.timestamps[m];
    let sender_beats = || match z_k {
        Some(w) => outbids(y_k, w, y_i, z_i),
        None => false,
    };

    match z_k {
        Some(zk) if zk == k => match z_i {
            Some(zi) if zi == i => if sender_beats() { Update } else { Leave },
            Some(zi) if zi == k => Update,
            Some(m) => if newer(m) || sender_beats() { Update } else { Leave },
            None => Update,
        },
        Some(zk) if zk == i => match z_i {
            Some(zi) if zi == i => Leave,
            Some(zi) if zi == k => Reset,
            Some(m) => if newer(m) { Reset } else { Leave },
            None => Leave,
        },
        Some(m) => match z_i {
            Some(zi) if zi == i => if newer(m) && sender_beats() { Update } else { Leave },
            Some(zi) if zi == k => if newer(m) { Update } else { Reset },
            Some(zi) if zi == m => if newer(m) { Update } else { Leave },
            Some(n) => {
                if newer(m) && newer(n) {
                    Update
                } else if newer(m) && sender_beats() {
                    Update
                } else if newer(n) && state.timestamps[m] > msg.timestamps[m] {
                    Reset
                } else {
                    Leave
                }
            }
            None => if newer(m) { Update } else { Leave },
        },
        None => match z_i {
            Some(zi) if zi == i => Leave,
            Some(zi) if zi == k => Update,
            Some(m) => if newer(m) { Update } else { Leave },
            None => Leave,
        },
    }
}

/// Drops the first bundle task the agent no longer wins and everything
/// claimed after it; later tasks still recorded as won by this agent are reset.
fn release_outbid_tasks(state: &mut BundleState) {
    let me = state.agent_id;
    let Some(cut) = state.bundle.iter().position(|&j| state.winners[j] != Some(me)) else {
        return;
    };
    let released: Vec<usize> = state.bundle.drain(cut..).collect();
    for &j in &released[1..] {
        if state.winners[j] == Some(me) {
            state.winning_bids[j] = 0.0;
            state.winners[j] = None;
        }
    }
    state.path.retain(|j| !released.contains(j));
}
