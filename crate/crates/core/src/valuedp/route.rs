use std::collections::HashMap;

use super::grid::TimeGrid;
use super::scenario::Scenario;
use super::table::{AgentState, MAX_ALLOCATED};
use super::DpError;
use crate::instance::{distance, AgentSpec, MissionInstance};
use crate::taskset::TaskSet;

/// How times are handled when replaying a route under a fixed scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteTiming {
    /// Continuous times; the horizon cuts off decisions after `H`.
    Exact,
    /// Times snapped up to a grid exactly as the value solver does.
    Grid(f64),
}

/// Best total reward for serving tasks from `allocated` when every travel
/// time is fixed by `scenario`: the clairvoyant optimum over orders and
/// over which tasks to attempt.
///
/// Attempting a task that turns out late still moves the agent there, which
/// can matter when arc speeds differ.
pub fn deterministic_route_reward(
    instance: &MissionInstance,
    agent: &AgentSpec,
    start: &AgentState,
    allocated: TaskSet,
    scenario: &Scenario,
    timing: RouteTiming,
) -> Result<f64, DpError> {
    if allocated.len() > MAX_ALLOCATED {
        return Err(DpError::TooManyTasks {
            count: allocated.len(),
            cap: MAX_ALLOCATED,
        });
    }
    if let Some(j) = allocated.iter().find(|&j| j >= instance.task_count()) {
        return Err(DpError::UnknownTask(j));
    }
    let clock = match timing {
        RouteTiming::Exact => Clock::Exact(instance.horizon),
        RouteTiming::Grid(step) => Clock::Grid(TimeGrid::new(step, instance.horizon)?),
    };
    let Some(t0) = clock.settle(start.time) else {
        return Ok(0.0);
    };
    let mut search = RouteSearch {
        instance,
        agent,
        scenario,
        clock,
        memo: HashMap::new(),
    };
    Ok(search.best(allocated, start.at, t0))
}

#[derive(Clone, Copy)]
enum Clock {
    Exact(f64),
    Grid(TimeGrid),
}

impl Clock {
    /// Time as the recursion sees it, or `None` once terminal.
    fn settle(&self, t: f64) -> Option<f64> {
        match self {
            Clock::Exact(h) => (t <= *h).then_some(t),
            Clock::Grid(grid) => {
                let snapped = grid.snap_up(t);
                grid.bin_of_snapped(snapped).map(|bin| grid.time(bin))
            }
        }
    }

    fn round(&self, t: f64) -> f64 {
        match self {
            Clock::Exact(_) => t,
            Clock::Grid(grid) => grid.snap_up(t),
        }
    }
}

struct RouteSearch<'a> {
    instance: &'a MissionInstance,
    agent: &'a AgentSpec,
    scenario: &'a Scenario,
    clock: Clock,
    memo: HashMap<(u64, usize, u64), f64>,
}

impl RouteSearch<'_> {
    fn position(&self, at: usize) -> crate::instance::Location {
        if at == 0 {
            self.agent.start
        } else {
            self.instance.tasks[at - 1].location
        }
    }

    fn best(&mut self, remaining: TaskSet, at: usize, t: f64) -> f64 {
        if remaining.is_empty() {
            return 0.0;
        }
        let key = (remaining.bits(), at, t.to_bits());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = 0.0f64;
        for j in remaining.iter() {
            let task = &self.instance.tasks[j];
            let travel = distance(self.position(at), task.location) / self.scenario.speed(at, j + 1);
            let arrival = self.clock.round(t + travel);
            let rest = remaining.without(j);
            let value = if arrival <= task.due_time {
                let done = self.clock.round(arrival.max(task.ready_time) + task.service_duration);
                task.price + self.continue_from(rest, j + 1, done)
            } else {
                self.continue_from(rest, j + 1, arrival)
            };
            if value > best {
                best = value;
            }
        }
        self.memo.insert(key, best);
        best
    }

    fn continue_from(&mut self, remaining: TaskSet, at: usize, t: f64) -> f64 {
        match self.clock.settle(t) {
            Some(t) => self.best(remaining, at, t),
            None => 0.0,
        }
    }
}
