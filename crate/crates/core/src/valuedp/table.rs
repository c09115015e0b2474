use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::quadrature::QuadratureRule;
use super::DpError;
use crate::instance::{distance, AgentSpec, MissionInstance};
use crate::taskset::TaskSet;

/// Largest allocated set the exact solver accepts.
pub const MAX_ALLOCATED: usize = 12;
pub const DEFAULT_GRID_STEP: f64 = 1.0;

/// Where an agent is and what it still has to resolve.
///
/// `at` is a global location index: 0 is the agent's start (the depot),
/// `j + 1` is task `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub time: f64,
    pub at: usize,
    pub remaining: TaskSet,
}

impl AgentState {
    /// Mission start: time 0 at the depot.
    pub fn start(remaining: TaskSet) -> Self {
        AgentState {
            time: 0.0,
            at: 0,
            remaining,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Fly to task `j` and serve it if the window is still open.
    Serve(usize),
    /// Drop task `j` at no cost and no time.
    Skip(usize),
    /// Stop; everything remaining stays unserved.
    Finish,
}

/// Per-task data in solver-local form.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LocalTask {
    global: usize,
    price: f64,
    ready: f64,
    due: f64,
    service: f64,
}

/// Transition data shared by the solver and by [`ValueTable::q_value`], so
/// both evaluate Q-values along the same arithmetic path.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TransitionModel {
    tasks: Vec<LocalTask>,
    weights: Vec<f64>,
    /// `travel[(from * k + to) * q + node]`, minutes; `from` is a local
    /// location (0 = start, `l + 1` = local task `l`).
    travel: Vec<f64>,
    grid: TimeGrid,
}

impl TransitionModel {
    fn k(&self) -> usize {
        self.tasks.len()
    }

    fn locations(&self) -> usize {
        self.tasks.len() + 1
    }

    fn index(&self, mask: u64, loc: usize, bin: usize) -> usize {
        (mask as usize * self.locations() + loc) * self.grid.bins() + bin
    }

    fn lookup(&self, values: &[f64], mask: u64, loc: usize, bin: Option<usize>) -> f64 {
        match bin {
            Some(b) => values[self.index(mask, loc, b)],
            None => 0.0,
        }
    }

    /// Expected return of serving local task `l` from `(mask, loc, bin)`.
    fn serve_q(&self, values: &[f64], mask: u64, loc: usize, bin: usize, l: usize) -> f64 {
        let task = &self.tasks[l];
        let child_mask = mask & !(1u64 << l);
        let child_loc = l + 1;
        let t = self.grid.time(bin);
        let q = self.weights.len();
        let base = (loc * self.k() + l) * q;
        let mut total = 0.0;
        for (node, &w) in self.weights.iter().enumerate() {
            let arrival = self.grid.snap_up(t + self.travel[base + node]);
            let outcome = if arrival <= task.due {
                let done = self.grid.snap_up(arrival.max(task.ready) + task.service);
                task.price + self.lookup(values, child_mask, child_loc, self.grid.bin_of_snapped(done))
            } else {
                self.lookup(values, child_mask, child_loc, self.grid.bin_of_snapped(arrival))
            };
            total += w * outcome;
        }
        total
    }

    fn skip_q(&self, values: &[f64], mask: u64, loc: usize, bin: usize, l: usize) -> f64 {
        values[self.index(mask & !(1u64 << l), loc, bin)]
    }
}

/// Action codes: 0 = Finish, `1 + l` = Serve(l), `1 + k + l` = Skip(l).
const FINISH: u8 = 0;

/// Exact solution of one agent's task-constrained MDP over every subset of
/// its allocated tasks.
///
/// Values are indexed by (remaining subset, location, time bin). Because a
/// subset's values depend only on the tasks in it, `value_for(S)` equals the
/// value of a table solved for `S` alone, bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueTable {
    pub agent: AgentSpec,
    pub allocated: TaskSet,
    pub start: AgentState,
    model: TransitionModel,
    values: Vec<f64>,
    policy: Vec<u8>,
}

/// Backward induction over `(remaining, location, time bin)`.
///
/// Serving `j` from time `t` flies at each quadrature speed, snaps the
/// arrival up to the grid, serves (after waiting for the ready time) if the
/// arrival is no later than the due time, and fails at zero reward
/// otherwise. Skipping is free; finishing is worth zero; states past the
/// horizon are terminal.
pub fn solve_value(
    instance: &MissionInstance,
    agent: &AgentSpec,
    start: AgentState,
    allocated: TaskSet,
    quad: &QuadratureRule,
    grid_step: f64,
) -> Result<ValueTable, DpError> {
    let k = allocated.len();
    if k > MAX_ALLOCATED {
        return Err(DpError::TooManyTasks {
            count: k,
            cap: MAX_ALLOCATED,
        });
    }
    if quad.is_empty() {
        return Err(DpError::InvalidQuadrature("rule has no nodes".into()));
    }
    let grid = TimeGrid::new(grid_step, instance.horizon)?;
    let mut tasks = Vec::with_capacity(k);
    for j in allocated.iter() {
        let task = instance.tasks.get(j).ok_or(DpError::UnknownTask(j))?;
        tasks.push(LocalTask {
            global: j,
            price: task.price,
            ready: task.ready_time,
            due: task.due_time,
            service: task.service_duration,
        });
    }
    let positions: Vec<_> = std::iter::once(agent.start)
        .chain(tasks.iter().map(|t| instance.tasks[t.global].location))
        .collect();
    let q = quad.len();
    let mut travel = vec![0.0; (k + 1) * k * q];
    for from in 0..=k {
        for to in 0..k {
            let d = distance(positions[from], positions[to + 1]);
            for (node, n) in quad.nodes.iter().enumerate() {
                travel[(from * k + to) * q + node] = d / n.speed;
            }
        }
    }
    let model = TransitionModel {
        tasks,
        weights: quad.nodes.iter().map(|n| n.weight).collect(),
        travel,
        grid,
    };

    let size = (1usize << k) * (k + 1) * grid.bins();
    let mut values = vec![0.0; size];
    let mut policy = vec![FINISH; size];
    // Children always have a numerically smaller mask, so increasing mask
    // order visits every child before its parents.
    for mask in 1u64..(1u64 << k) {
        for loc in 0..=k {
            if loc > 0 && mask & (1u64 << (loc - 1)) != 0 {
                continue; // cannot stand on an unresolved task
            }
            for bin in 0..grid.bins() {
                let (value, action) = best_action(&model, &values, mask, loc, bin);
                let idx = model.index(mask, loc, bin);
                values[idx] = value;
                policy[idx] = action;
            }
        }
    }

    let table = ValueTable {
        agent: agent.clone(),
        allocated,
        start,
        model,
        values,
        policy,
    };
    table.locate(&start)?;
    Ok(table)
}

/// Argmax with ties to Serve, then Skip, then Finish, then lowest task id.
fn best_action(model: &TransitionModel, values: &[f64], mask: u64, loc: usize, bin: usize) -> (f64, u8) {
    let k = model.k();
    let mut best = f64::NEG_INFINITY;
    let mut code = FINISH;
    for l in TaskSet::from_bits(mask).iter() {
        let q = model.serve_q(values, mask, loc, bin, l);
        if q > best {
            best = q;
            code = 1 + l as u8;
        }
    }
    for l in TaskSet::from_bits(mask).iter() {
        let q = model.skip_q(values, mask, loc, bin, l);
        if q > best {
            best = q;
            code = (1 + k + l) as u8;
        }
    }
    if 0.0 > best {
        best = 0.0;
        code = FINISH;
    }
    (best, code)
}

impl ValueTable {
    pub fn grid(&self) -> &TimeGrid {
        &self.model.grid
    }

    pub fn grid_step(&self) -> f64 {
        self.model.grid.step()
    }

    /// Allocated task ids in ascending order.
    pub fn tasks(&self) -> impl Iterator<Item = usize> + '_ {
        self.model.tasks.iter().map(|t| t.global)
    }

    fn local_of(&self, global: usize) -> Option<usize> {
        self.model.tasks.iter().position(|t| t.global == global)
    }

    fn local_mask(&self, set: TaskSet) -> Result<u64, DpError> {
        let mut mask = 0u64;
        for j in set.iter() {
            let l = self
                .local_of(j)
                .ok_or_else(|| DpError::StateOutOfRange(format!("task {j} is not allocated")))?;
            mask |= 1u64 << l;
        }
        Ok(mask)
    }

    /// `(local mask, local location, bin)` of a state.
    fn locate(&self, state: &AgentState) -> Result<(u64, usize, usize), DpError> {
        let mask = self.local_mask(state.remaining)?;
        let loc = if state.at == 0 {
            0
        } else {
            let l = self
                .local_of(state.at - 1)
                .ok_or_else(|| DpError::StateOutOfRange(format!("location {} is not an allocated task", state.at)))?;
            if mask & (1u64 << l) != 0 {
                return Err(DpError::StateOutOfRange(format!(
                    "agent stands on unresolved task {}",
                    state.at - 1
                )));
            }
            l + 1
        };
        if !(state.time.is_finite() && state.time >= 0.0) {
            return Err(DpError::StateOutOfRange(format!("time {}", state.time)));
        }
        let bin = self
            .model
            .grid
            .bin_at(state.time)
            .ok_or_else(|| DpError::StateOutOfRange(format!("time {} is past the horizon", state.time)))?;
        Ok((mask, loc, bin))
    }

    /// Optimal expected reward from `state` (time snapped up to the grid).
    pub fn value_of(&self, state: &AgentState) -> Result<f64, DpError> {
        let (mask, loc, bin) = self.locate(state)?;
        Ok(self.values[self.model.index(mask, loc, bin)])
    }

    /// Value of executing exactly `remaining` from the table's start state.
    pub fn value_for(&self, remaining: TaskSet) -> Result<f64, DpError> {
        self.value_of(&AgentState {
            remaining,
            ..self.start
        })
    }

    pub fn value_at_start(&self) -> f64 {
        self.value_of(&self.start).expect("start state was validated")
    }

    /// Stored argmax action at `state`.
    pub fn next_action(&self, state: &AgentState) -> Result<Action, DpError> {
        let (mask, loc, bin) = self.locate(state)?;
        Ok(self.decode(self.policy[self.model.index(mask, loc, bin)]))
    }

    /// Expected return of taking `action` at `state` and acting optimally after.
    pub fn q_value(&self, state: &AgentState, action: Action) -> Result<f64, DpError> {
        let (mask, loc, bin) = self.locate(state)?;
        let local = |j: usize| -> Result<usize, DpError> {
            match self.local_of(j) {
                Some(l) if mask & (1u64 << l) != 0 => Ok(l),
                _ => Err(DpError::InvalidAction(format!(
                    "{action:?} with remaining {}",
                    state.remaining
                ))),
            }
        };
        Ok(match action {
            Action::Finish => 0.0,
            Action::Serve(j) => self.model.serve_q(&self.values, mask, loc, bin, local(j)?),
            Action::Skip(j) => self.model.skip_q(&self.values, mask, loc, bin, local(j)?),
        })
    }

    /// Actions allowed at `state`: Serve/Skip for each remaining task, then Finish.
    pub fn legal_actions(&self, state: &AgentState) -> Vec<Action> {
        let mut actions: Vec<_> = state.remaining.iter().map(Action::Serve).collect();
        actions.extend(state.remaining.iter().map(Action::Skip));
        actions.push(Action::Finish);
        actions
    }

    fn decode(&self, code: u8) -> Action {
        let k = self.model.k();
        let code = code as usize;
        if code == 0 {
            Action::Finish
        } else if code <= k {
            Action::Serve(self.model.tasks[code - 1].global)
        } else {
            Action::Skip(self.model.tasks[code - 1 - k].global)
        }
    }

    /// Number of stored `(subset, location, bin)` entries.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every valid stored state, for exhaustive checks.
    pub fn states(&self) -> impl Iterator<Item = AgentState> + '_ {
        let k = self.model.k();
        let grid = self.model.grid;
        (0u64..(1u64 << k)).flat_map(move |mask| {
            (0..=k)
                .filter(move |&loc| loc == 0 || mask & (1u64 << (loc - 1)) == 0)
                .flat_map(move |loc| {
                    (0..grid.bins()).map(move |bin| AgentState {
                        time: grid.time(bin),
                        at: if loc == 0 {
                            0
                        } else {
                            self.model.tasks[loc - 1].global + 1
                        },
                        remaining: TaskSet::from_bits(mask)
                            .iter()
                            .map(|l| self.model.tasks[l].global)
                            .collect(),
                    })
                })
        })
    }
}
