use serde::{Deserialize, Serialize};

use super::DpError;

/// Slack when snapping to the grid, so values that are grid points up to
/// rounding noise stay on their own bin.
const SNAP_EPS: f64 = 1e-9;

/// Uniform time grid `0, step, 2 step, ..` up to the horizon.
///
/// Times are snapped *up*: an arrival at 10.2 min with a 1 min step counts
/// as 11 min. Snapping up makes grid schedules pessimistic, so anything
/// feasible on the grid is feasible in continuous time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step: f64,
    horizon: f64,
    bins: usize,
}

impl TimeGrid {
    pub fn new(step: f64, horizon: f64) -> Result<Self, DpError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(DpError::InvalidGridStep(step));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(DpError::InvalidHorizon(horizon));
        }
        let bins = (horizon / step + SNAP_EPS).floor() as usize + 1;
        Ok(TimeGrid { step, horizon, bins })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of decision bins; bin `bins - 1` is the last one inside the horizon.
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn time(&self, bin: usize) -> f64 {
        bin as f64 * self.step
    }

    /// Smallest grid time `>= t` (never negative).
    pub fn snap_up(&self, t: f64) -> f64 {
        ((t / self.step) - SNAP_EPS).ceil().max(0.0) * self.step
    }

    /// Bin of an already snapped time, or `None` once past the horizon.
    pub fn bin_of_snapped(&self, snapped: f64) -> Option<usize> {
        let k = (snapped / self.step).round();
        if k < self.bins as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Bin used to look up decisions at continuous time `t`.
    pub fn bin_at(&self, t: f64) -> Option<usize> {
        self.bin_of_snapped(self.snap_up(t))
    }
}
