use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::quadrature::QuadratureRule;
use super::table::{solve_value, AgentState, ValueTable, MAX_ALLOCATED};
use super::DpError;
use crate::instance::MissionInstance;
use crate::taskset::TaskSet;

/// Start-state values `V(s0; S)` for every agent and task set `S`.
///
/// When the whole task list fits under the solver cap, each agent gets one
/// table over all tasks and every subset is a lookup. Larger instances solve
/// one table per queried subset and cache it. Agents with the same start
/// and speed model share tables.
pub struct SetValueOracle {
    instance: Arc<MissionInstance>,
    quad: QuadratureRule,
    grid_step: f64,
    /// Index into `full` per agent, when full tables are in use.
    agent_table: Vec<usize>,
    full: Vec<Arc<ValueTable>>,
    cache: Mutex<HashMap<(usize, TaskSet), f64>>,
}

impl SetValueOracle {
    pub fn new(instance: Arc<MissionInstance>, quad: QuadratureRule, grid_step: f64) -> Result<Self, DpError> {
        let n = instance.task_count();
        let mut agent_table = Vec::new();
        let mut full: Vec<Arc<ValueTable>> = Vec::new();
        if n <= MAX_ALLOCATED {
            let all = TaskSet::first_n(n);
            for agent in &instance.agents {
                let shared = full
                    .iter()
                    .position(|t| t.agent.start == agent.start && t.agent.speed == agent.speed);
                let idx = match shared {
                    Some(idx) => idx,
                    None => {
                        let table = solve_value(&instance, agent, AgentState::start(all), all, &quad, grid_step)?;
                        full.push(Arc::new(table));
                        full.len() - 1
                    }
                };
                agent_table.push(idx);
            }
        }
        Ok(SetValueOracle {
            instance,
            quad,
            grid_step,
            agent_table,
            full,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn instance(&self) -> &Arc<MissionInstance> {
        &self.instance
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    /// `V(s0; tasks)` for `agent`.
    pub fn value(&self, agent: usize, tasks: TaskSet) -> Result<f64, DpError> {
        if let Some(&idx) = self.agent_table.get(agent) {
            return self.full[idx].value_for(tasks);
        }
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&(agent, tasks)) {
            return Ok(v);
        }
        let table = self.solve_subset(agent, tasks)?;
        let v = table.value_at_start();
        self.cache.lock().expect("cache lock").insert((agent, tasks), v);
        Ok(v)
    }

    /// A table whose start state has `tasks` remaining, for executing them.
    pub fn policy_table(&self, agent: usize, tasks: TaskSet) -> Result<Arc<ValueTable>, DpError> {
        match self.agent_table.get(agent) {
            Some(&idx) => Ok(self.full[idx].clone()),
            None => Ok(Arc::new(self.solve_subset(agent, tasks)?)),
        }
    }

    fn solve_subset(&self, agent: usize, tasks: TaskSet) -> Result<ValueTable, DpError> {
        let spec = self
            .instance
            .agents
            .get(agent)
            .ok_or_else(|| DpError::StateOutOfRange(format!("agent {agent}")))?;
        solve_value(
            &self.instance,
            spec,
            AgentState::start(tasks),
            tasks,
            &self.quad,
            self.grid_step,
        )
    }
}
