//! Property suites: submodularity and monotonicity of the set value
//! function, the brute-force optimum behind the optimality ratio, the
//! convergence bound, and Bellman consistency of the value tables.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use stochauction_core::auction::{run_auction, AuctionError, NetworkModel, Topology};
use stochauction_core::instance::{distance, Location, MissionInstance};
use stochauction_core::rng::derive_seed;
use stochauction_core::valuedp::{
    build_quadrature, deterministic_route_reward, AgentState, DpError, QuadratureRule, RouteTiming, Scenario,
    SetValueOracle, ValueTable,
};
use stochauction_core::{generate_instance, GenerationConfig, TaskSet};

/// Tolerance for comparisons between value-function sums.
pub const VALUE_TOLERANCE: f64 = 1e-9;
/// Largest task count the subset suites enumerate.
pub const MAX_CHECK_TASKS: usize = 5;
/// Largest number of node-speed combinations tried when classifying `R`.
pub const MAX_SCENARIO_COMBINATIONS: u64 = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum PropertyError {
    #[error("{what} has {got} elements, limit {cap}")]
    SizeCap { what: &'static str, got: usize, cap: usize },
    #[error(transparent)]
    Value(#[from] DpError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Instance(#[from] stochauction_core::instance::InstanceError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub instance_seed: u64,
    pub agent: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: u64,
    pub violations: u64,
    pub worst_violation_magnitude: f64,
    pub witnesses: Vec<Witness>,
}

impl PropertyReport {
    pub fn new(property: &str) -> Self {
        PropertyReport {
            property: property.to_string(),
            trials: 0,
            violations: 0,
            worst_violation_magnitude: 0.0,
            witnesses: Vec::new(),
        }
    }

    fn check(&mut self, shortfall: f64, tolerance: f64, witness: impl FnOnce() -> Witness) {
        self.trials += 1;
        if shortfall > tolerance {
            self.violations += 1;
            self.worst_violation_magnitude = self.worst_violation_magnitude.max(shortfall);
            self.witnesses.push(witness());
        }
    }

    pub fn merge(&mut self, other: PropertyReport) {
        self.trials += other.trials;
        self.violations += other.violations;
        self.worst_violation_magnitude = self.worst_violation_magnitude.max(other.worst_violation_magnitude);
        self.witnesses.extend(other.witnesses);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// One line: `property trials=.. violations=.. worst=..`.
    pub fn summary(&self) -> String {
        format!(
            "{} trials={} violations={} worst={:.3e}",
            self.property, self.trials, self.violations, self.worst_violation_magnitude
        )
    }
}

fn cap(what: &'static str, got: usize, cap: usize) -> Result<(), PropertyError> {
    if got > cap {
        Err(PropertyError::SizeCap { what, got, cap })
    } else {
        Ok(())
    }
}

/// Every `(small, big, j)` with `small ⊆ big ⊆ all` and `j ∉ big`.
fn nested_triples(all: TaskSet) -> impl Iterator<Item = (TaskSet, TaskSet, usize)> {
    all.subsets().flat_map(move |big| {
        big.subsets()
            .flat_map(move |small| all.difference(big).iter().map(move |j| (small, big, j)))
    })
}

/// Largest violation of the diminishing-returns inequality for `f` over all
/// nested triples; zero when there is none.
fn submodularity_gap(all: TaskSet, f: &dyn Fn(TaskSet) -> f64) -> f64 {
    nested_triples(all)
        .map(|(small, big, j)| (f(big.with(j)) - f(big)) - (f(small.with(j)) - f(small)))
        .fold(0.0, f64::max)
}

/// Whether the deterministic reward `R` is submodular in the task set under
/// every combination of quadrature speeds over the arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RewardClass {
    Submodular,
    NotSubmodular,
    /// Too many speed combinations to enumerate.
    Unclassified,
}

/// Classifies `R` for one agent over all of the instance's tasks. Rewards use
/// the same grid timing as the value tables.
pub fn classify_reward(
    instance: &MissionInstance,
    agent: usize,
    quad: &QuadratureRule,
    grid_step: f64,
) -> Result<RewardClass, PropertyError> {
    let n = instance.task_count();
    cap("task set", n, MAX_CHECK_TASKS)?;
    let spec = &instance.agents[agent];
    let all = TaskSet::first_n(n);
    let arcs: Vec<(usize, usize)> = (0..=n)
        .flat_map(|from| (1..=n).filter(move |&to| to != from).map(move |to| (from, to)))
        .collect();
    let q = quad.len() as u64;
    let combos = match q.checked_pow(arcs.len() as u32) {
        Some(c) if c <= MAX_SCENARIO_COMBINATIONS => c,
        _ => return Ok(RewardClass::Unclassified),
    };
    let mut scenario = Scenario::mean(instance);
    let subsets: Vec<TaskSet> = all.subsets().collect();
    let mut values = vec![0.0; 1 << n];
    for combo in 0..combos {
        let mut code = combo;
        for &(from, to) in &arcs {
            scenario.set_speed(from, to, quad.nodes[(code % q) as usize].speed);
            code /= q;
        }
        for &s in &subsets {
            values[s.bits() as usize] = deterministic_route_reward(
                instance,
                spec,
                &AgentState::start(s),
                s,
                &scenario,
                RouteTiming::Grid(grid_step),
            )?;
        }
        if submodularity_gap(all, &|s| values[s.bits() as usize]) > VALUE_TOLERANCE {
            return Ok(RewardClass::NotSubmodular);
        }
    }
    Ok(RewardClass::Submodular)
}

/// Diminishing returns of `V` for one agent over every nested pair of task
/// sets and every outside task.
pub fn check_submodularity_v(oracle: &SetValueOracle, agent: usize) -> Result<PropertyReport, PropertyError> {
    let instance = oracle.instance();
    let n = instance.task_count();
    cap("task set", n, MAX_CHECK_TASKS)?;
    let all = TaskSet::first_n(n);
    let values = subset_values(oracle, agent, all)?;
    let v = |s: TaskSet| values[s.bits() as usize];
    let mut report = PropertyReport::new("submodularity");
    for (small, big, j) in nested_triples(all) {
        let gap = (v(big.with(j)) - v(big)) - (v(small.with(j)) - v(small));
        report.check(gap, VALUE_TOLERANCE, || Witness {
            instance_seed: instance.seed,
            agent,
            detail: format!("small={small} big={big} j={j} gap={gap:e}"),
        });
    }
    Ok(report)
}

/// `V(big) >= V(small)` for every nested pair.
pub fn check_monotonicity_v(oracle: &SetValueOracle, agent: usize) -> Result<PropertyReport, PropertyError> {
    let instance = oracle.instance();
    let n = instance.task_count();
    cap("task set", n, MAX_CHECK_TASKS)?;
    let all = TaskSet::first_n(n);
    let values = subset_values(oracle, agent, all)?;
    let mut report = PropertyReport::new("monotonicity");
    for big in all.subsets() {
        for small in big.subsets() {
            let drop = values[small.bits() as usize] - values[big.bits() as usize];
            report.check(drop, 0.0, || Witness {
                instance_seed: instance.seed,
                agent,
                detail: format!("small={small} big={big} drop={drop:e}"),
            });
        }
    }
    Ok(report)
}

fn subset_values(oracle: &SetValueOracle, agent: usize, all: TaskSet) -> Result<Vec<f64>, PropertyError> {
    let mut values = vec![0.0; 1 << all.len()];
    for s in all.subsets() {
        values[s.bits() as usize] = oracle.value(agent, s)?;
    }
    Ok(values)
}

/// Best `Σ_i V(Γ_i) − c_pen·|unassigned|` over every capacity-respecting
/// assignment; ties keep the first assignment in enumeration order.
pub fn brute_force_opt(oracle: &SetValueOracle) -> Result<(f64, Vec<Vec<usize>>), PropertyError> {
    let instance = oracle.instance();
    let n = instance.task_count();
    let m = instance.agent_count();
    cap("task set", n, 4)?;
    cap("agent set", m, 3)?;
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    // Each task goes to an agent (0..m) or stays unassigned (m).
    let total = (m as u64 + 1).pow(n as u32);
    for code in 0..total {
        let mut sets = vec![TaskSet::empty(); m];
        let mut unassigned = 0;
        let mut c = code;
        for j in 0..n {
            let slot = (c % (m as u64 + 1)) as usize;
            c /= m as u64 + 1;
            if slot == m {
                unassigned += 1;
            } else {
                sets[slot].insert(j);
            }
        }
        if sets.iter().zip(&instance.agents).any(|(s, a)| s.len() > a.capacity) {
            continue;
        }
        let mut value = -instance.penalty * unassigned as f64;
        for (i, s) in sets.iter().enumerate() {
            value += oracle.value(i, *s)?;
        }
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, sets.iter().map(|s| s.iter().collect()).collect()));
        }
    }
    Ok(best.expect("the empty assignment is always feasible"))
}

/// Best `Σ_i V(Γ_i)` alone, with the same enumeration.
pub fn brute_force_value_sum(oracle: &SetValueOracle) -> Result<f64, PropertyError> {
    let instance = oracle.instance();
    let n = instance.task_count();
    let m = instance.agent_count();
    cap("task set", n, 4)?;
    cap("agent set", m, 3)?;
    let mut best = 0.0f64;
    let total = (m as u64 + 1).pow(n as u32);
    for code in 0..total {
        let mut sets = vec![TaskSet::empty(); m];
        let mut c = code;
        for j in 0..n {
            let slot = (c % (m as u64 + 1)) as usize;
            c /= m as u64 + 1;
            if slot < m {
                sets[slot].insert(j);
            }
        }
        if sets.iter().zip(&instance.agents).any(|(s, a)| s.len() > a.capacity) {
            continue;
        }
        let mut value = 0.0;
        for (i, s) in sets.iter().enumerate() {
            value += oracle.value(i, *s)?;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Shared knobs for the randomized suites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub task_counts: Vec<usize>,
    pub agents: usize,
    pub sigma_grid: Vec<f64>,
    pub quadrature: usize,
    pub grid_step: f64,
    pub seed: u64,
}

impl SuiteConfig {
    /// Instance `k` of the suite.
    pub fn instance(&self, k: usize) -> Result<MissionInstance, PropertyError> {
        let n = self.task_counts[k % self.task_counts.len()];
        let sigma = self.sigma_grid[(k / self.task_counts.len()) % self.sigma_grid.len()];
        Ok(generate_instance(&GenerationConfig::new(
            n,
            self.agents,
            sigma,
            derive_seed(self.seed, &[k as u64]),
        ))?)
    }

    pub fn oracle(&self, instance: MissionInstance) -> Result<SetValueOracle, PropertyError> {
        let quad = build_quadrature(instance.speed_model(), self.quadrature)?;
        Ok(SetValueOracle::new(Arc::new(instance), quad, self.grid_step)?)
    }
}

/// V-submodularity split by whether `R` was verified submodular.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmodularitySuite {
    pub r_submodular_instances: usize,
    pub other_instances: usize,
    pub unclassified_instances: usize,
    pub r_submodular: PropertyReport,
    pub other: PropertyReport,
    pub unclassified: PropertyReport,
}

impl SubmodularitySuite {
    pub fn passed(&self) -> bool {
        self.r_submodular.passed()
    }
}

/// Draws instances until `cfg.trials` of them have a verified-submodular
/// `R` (or `max_instances` are spent), checking V on agent 0 of each.
pub fn submodularity_suite(cfg: &SuiteConfig, max_instances: usize) -> Result<SubmodularitySuite, PropertyError> {
    let mut suite = SubmodularitySuite {
        r_submodular_instances: 0,
        other_instances: 0,
        unclassified_instances: 0,
        r_submodular: PropertyReport::new("submodularity|R submodular"),
        other: PropertyReport::new("submodularity|R not submodular"),
        unclassified: PropertyReport::new("submodularity|unclassified"),
    };
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut next = 0;
    while suite.r_submodular_instances < cfg.trials && next < max_instances {
        let end = (next + batch).min(max_instances);
        let results: Vec<(RewardClass, PropertyReport)> = (next..end)
            .into_par_iter()
            .map(|k| {
                let oracle = cfg.oracle(cfg.instance(k)?)?;
                let class = classify_reward(oracle.instance(), 0, oracle.quadrature(), cfg.grid_step)?;
                Ok((class, check_submodularity_v(&oracle, 0)?))
            })
            .collect::<Result<_, PropertyError>>()?;
        for (class, report) in results {
            match class {
                RewardClass::Submodular if suite.r_submodular_instances < cfg.trials => {
                    suite.r_submodular_instances += 1;
                    suite.r_submodular.merge(report);
                }
                RewardClass::Submodular => {}
                RewardClass::NotSubmodular => {
                    suite.other_instances += 1;
                    suite.other.merge(report);
                }
                RewardClass::Unclassified => {
                    suite.unclassified_instances += 1;
                    suite.unclassified.merge(report);
                }
            }
        }
        next = end;
    }
    Ok(suite)
}

/// Monotonicity of V for every agent of `cfg.trials` instances.
pub fn monotonicity_suite(cfg: &SuiteConfig) -> Result<PropertyReport, PropertyError> {
    let reports: Vec<PropertyReport> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let oracle = cfg.oracle(cfg.instance(k)?)?;
            let mut r = PropertyReport::new("monotonicity");
            for agent in 0..oracle.instance().agent_count() {
                r.merge(check_monotonicity_v(&oracle, agent)?);
            }
            Ok(r)
        })
        .collect::<Result<_, PropertyError>>()?;
    let mut total = PropertyReport::new("monotonicity");
    reports.into_iter().for_each(|r| total.merge(r));
    Ok(total)
}

/// Optimality ratios of the auction against brute force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    /// `auction expected reward >= opt / 2` with penalties included.
    pub penalized: PropertyReport,
    /// The same bound on `Σ V` alone.
    pub value_sum: PropertyReport,
    /// Per instance `(auction, optimum)` with penalties included.
    pub pairs: Vec<(f64, f64)>,
    /// Per instance `(auction Σ V, optimum Σ V)`.
    pub value_pairs: Vec<(f64, f64)>,
}

impl OptimalityReport {
    /// Ratios `auction / optimum` over instances with a positive optimum.
    pub fn ratios(pairs: &[(f64, f64)]) -> Vec<f64> {
        pairs.iter().filter(|(_, o)| *o > 0.0).map(|(a, o)| a / o).collect()
    }
}

pub fn optimality_suite(cfg: &SuiteConfig, wrapping: bool) -> Result<OptimalityReport, PropertyError> {
    let rows: Vec<(u64, f64, f64, f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let oracle = cfg.oracle(cfg.instance(k)?)?;
            let instance = oracle.instance().clone();
            let net = NetworkModel::complete(instance.agent_count());
            let result = run_auction(&instance, &net, &oracle, wrapping, 1000)?;
            let (opt, _) = brute_force_opt(&oracle)?;
            let opt_sum = brute_force_value_sum(&oracle)?;
            let sum: f64 = result.per_agent_value.iter().sum();
            Ok((instance.seed, result.expected_reward(&instance), opt, sum, opt_sum))
        })
        .collect::<Result<_, PropertyError>>()?;
    let mut report = OptimalityReport {
        penalized: PropertyReport::new("optimality|penalized"),
        value_sum: PropertyReport::new("optimality|value sum"),
        pairs: Vec::new(),
        value_pairs: Vec::new(),
    };
    for (seed, got, opt, sum, opt_sum) in rows {
        let witness = |a: f64, o: f64| Witness {
            instance_seed: seed,
            agent: 0,
            detail: format!("auction={a} optimum={o}"),
        };
        report.penalized.check(0.5 * opt - got, 0.0, || witness(got, opt));
        report
            .value_sum
            .check(0.5 * opt_sum - sum, 0.0, || witness(sum, opt_sum));
        report.pairs.push((got, opt));
        report.value_pairs.push((sum, opt_sum));
    }
    Ok(report)
}

/// Rounds to converge against the `|Γ| · max(D, 1)` bound.
pub fn convergence_suite(cfg: &SuiteConfig, topologies: &[Topology]) -> Result<PropertyReport, PropertyError> {
    let reports: Vec<PropertyReport> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let oracle = cfg.oracle(cfg.instance(k)?)?;
            let instance = oracle.instance();
            let mut r = PropertyReport::new("convergence");
            for &topology in topologies {
                let net = NetworkModel::build(topology, instance.agent_count());
                let bound = (instance.task_count() * net.diameter().max(1)) as f64;
                let rounds = match run_auction(instance, &net, &oracle, true, 1000) {
                    Ok(result) => result.rounds_to_converge as f64,
                    Err(AuctionError::NonConvergence(_)) => f64::INFINITY,
                    Err(e) => return Err(e.into()),
                };
                r.check(rounds - bound, 0.0, || Witness {
                    instance_seed: instance.seed,
                    agent: 0,
                    detail: format!("topology={topology} rounds={rounds} bound={bound}"),
                });
            }
            Ok(r)
        })
        .collect::<Result<_, PropertyError>>()?;
    let mut total = PropertyReport::new("convergence");
    reports.into_iter().for_each(|r| total.merge(r));
    Ok(total)
}

/// Max-Q identity on up to `samples` states spread over the table.
pub fn check_bellman(table: &ValueTable, samples: usize, seed: u64) -> Result<PropertyReport, PropertyError> {
    let states: Vec<AgentState> = table.states().collect();
    let mut report = PropertyReport::new("bellman");
    if states.is_empty() {
        return Ok(report);
    }
    for s in 0..samples.min(states.len()) {
        let state = &states[(derive_seed(seed, &[s as u64]) % states.len() as u64) as usize];
        let value = table.value_of(state)?;
        let mut best = f64::NEG_INFINITY;
        for action in table.legal_actions(state) {
            best = best.max(table.q_value(state, action)?);
        }
        let chosen = table.q_value(state, table.next_action(state)?)?;
        let gap = (value - best).abs().max((value - chosen).abs());
        report.check(gap, 0.0, || Witness {
            instance_seed: 0,
            agent: table.agent.id,
            detail: format!("state={state:?} value={value} best={best} chosen={chosen}"),
        });
    }
    Ok(report)
}

/// Value tables against schedule enumeration, plus sampled Bellman states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSuite {
    /// DP values equal grid-timed enumeration over every subset.
    pub enumeration: PropertyReport,
    /// Exact-time enumeration lies between the DP value and the DP value of
    /// the instance with deadlines and horizon pushed back by `2·δ·|Γ|`.
    pub bracketing: PropertyReport,
    pub bellman: PropertyReport,
}

impl OracleSuite {
    pub fn passed(&self) -> bool {
        self.enumeration.passed() && self.bracketing.passed() && self.bellman.passed()
    }
}

/// Runs [`OracleSuite`] on `cfg.trials` instances, sampling
/// `states_per_instance` Bellman states from every agent's full table.
pub fn oracle_suite(cfg: &SuiteConfig, states_per_instance: usize) -> Result<OracleSuite, PropertyError> {
    let reports: Vec<OracleSuite> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let instance = cfg.instance(k)?;
            let n = instance.task_count();
            cap("task set", n, 4)?;
            // Arrival and completion each snap up once per served task.
            let slack = 2.0 * cfg.grid_step * n as f64;
            let mut relaxed = instance.clone();
            relaxed.horizon += slack;
            relaxed.tasks.iter_mut().for_each(|t| t.due_time += slack);
            let upper = cfg.oracle(relaxed)?;
            let oracle = cfg.oracle(instance)?;
            let instance = oracle.instance();
            let quad = oracle.quadrature();
            let all = TaskSet::first_n(n);
            let mut out = OracleSuite {
                enumeration: PropertyReport::new("oracle|grid enumeration"),
                bracketing: PropertyReport::new("oracle|exact-time bracketing"),
                bellman: PropertyReport::new("oracle|bellman"),
            };
            for agent in 0..instance.agent_count() {
                for s in all.subsets() {
                    let dp = oracle.value(agent, s)?;
                    let grid = enumerate_schedules(instance, agent, s, quad, Some(cfg.grid_step))?;
                    let exact = enumerate_schedules(instance, agent, s, quad, None)?;
                    let hi = upper.value(agent, s)?;
                    let witness = |detail: String| Witness {
                        instance_seed: instance.seed,
                        agent,
                        detail,
                    };
                    out.enumeration.check((dp - grid).abs(), VALUE_TOLERANCE, || {
                        witness(format!("set={s} dp={dp} enumerated={grid}"))
                    });
                    let outside = (dp - exact).max(exact - hi);
                    out.bracketing.check(outside, VALUE_TOLERANCE, || {
                        witness(format!("set={s} dp={dp} exact={exact} relaxed={hi}"))
                    });
                }
                let table = oracle.policy_table(agent, all)?;
                let seed = derive_seed(cfg.seed, &[k as u64, agent as u64]);
                let mut bellman = check_bellman(&table, states_per_instance, seed)?;
                bellman
                    .witnesses
                    .iter_mut()
                    .for_each(|w| w.instance_seed = instance.seed);
                out.bellman.merge(bellman);
            }
            Ok(out)
        })
        .collect::<Result<_, PropertyError>>()?;
    let mut total = OracleSuite {
        enumeration: PropertyReport::new("oracle|grid enumeration"),
        bracketing: PropertyReport::new("oracle|exact-time bracketing"),
        bellman: PropertyReport::new("oracle|bellman"),
    };
    for r in reports {
        total.enumeration.merge(r.enumeration);
        total.bracketing.merge(r.bracketing);
        total.bellman.merge(r.bellman);
    }
    Ok(total)
}

/// Expected reward of the best adaptive schedule, by plain recursion over
/// every serve/skip choice and every quadrature speed. Times snap up to
/// `grid_step` when given, exactly as in the value tables.
pub fn enumerate_schedules(
    instance: &MissionInstance,
    agent: usize,
    tasks: TaskSet,
    quad: &QuadratureRule,
    grid_step: Option<f64>,
) -> Result<f64, PropertyError> {
    cap("task set", tasks.len(), MAX_CHECK_TASKS)?;
    let search = Schedules {
        instance,
        nodes: quad.nodes.iter().map(|n| (n.speed, n.weight)).collect(),
        grid_step,
    };
    let remaining: Vec<usize> = tasks.iter().collect();
    Ok(search.value(&remaining, instance.agents[agent].start, 0.0))
}

struct Schedules<'a> {
    instance: &'a MissionInstance,
    nodes: Vec<(f64, f64)>,
    grid_step: Option<f64>,
}

impl Schedules<'_> {
    fn clock(&self, t: f64) -> f64 {
        match self.grid_step {
            Some(s) => ((t / s) - 1e-9).ceil().max(0.0) * s,
            None => t,
        }
    }

    fn value(&self, remaining: &[usize], here: Location, t: f64) -> f64 {
        if remaining.is_empty() || t > self.instance.horizon + 1e-9 {
            return 0.0;
        }
        let mut best = 0.0f64;
        for (pos, &j) in remaining.iter().enumerate() {
            let mut rest = remaining.to_vec();
            rest.remove(pos);
            best = best.max(self.value(&rest, here, t));
            let task = &self.instance.tasks[j];
            let serve: f64 = self
                .nodes
                .iter()
                .map(|&(speed, weight)| {
                    let arrival = self.clock(t + distance(here, task.location) / speed);
                    weight
                        * if arrival <= task.due_time {
                            let done = self.clock(arrival.max(task.ready_time) + task.service_duration);
                            task.price + self.value(&rest, task.location, done)
                        } else {
                            self.value(&rest, task.location, arrival)
                        }
                })
                .sum();
            best = best.max(serve);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stochauction_core::instance::{AgentSpec, SpeedModel, Task};

    fn fleet(tasks: &[(f64, f64, f64)], agents: usize, variance: f64) -> MissionInstance {
        MissionInstance {
            horizon: 480.0,
            depot: Location::new(0.0, 0.0),
            tasks: tasks
                .iter()
                .enumerate()
                .map(|(id, &(x, ready, due))| Task {
                    id,
                    location: Location::new(x, 0.0),
                    price: 1.0,
                    ready_time: ready,
                    due_time: due,
                    service_duration: 10.0,
                    windowed: due < 480.0,
                })
                .collect(),
            agents: (0..agents)
                .map(|id| AgentSpec {
                    id,
                    start: Location::new(0.0, 0.0),
                    capacity: 2,
                    speed: SpeedModel::new(1.0, variance),
                })
                .collect(),
            penalty: 1.0,
            seed: 0,
        }
    }

    fn oracle(inst: MissionInstance) -> SetValueOracle {
        let quad = build_quadrature(inst.speed_model(), 1).unwrap();
        SetValueOracle::new(Arc::new(inst), quad, 1.0).unwrap()
    }

    #[test]
    fn modular_rewards_give_no_violations() {
        let inst = fleet(&[(10.0, 0.0, 480.0), (20.0, 0.0, 480.0), (30.0, 0.0, 480.0)], 1, 0.0);
        let oracle = oracle(inst.clone());
        assert_eq!(
            classify_reward(&inst, 0, oracle.quadrature(), 1.0).unwrap(),
            RewardClass::Submodular
        );
        let report = check_submodularity_v(&oracle, 0).unwrap();
        assert!(report.passed());
        assert!(report.trials > 0);
        assert!(check_monotonicity_v(&oracle, 0).unwrap().passed());
    }

    #[test]
    fn single_task_optimum() {
        let o = oracle(fleet(&[(10.0, 0.0, 480.0)], 1, 0.0));
        assert_eq!(brute_force_opt(&o).unwrap(), (1.0, vec![vec![0]]));
        let o = oracle(fleet(&[(100.0, 0.0, 20.0)], 1, 0.0));
        // Holding an unreachable task beats leaving it unassigned.
        assert_eq!(brute_force_opt(&o).unwrap(), (0.0, vec![vec![0]]));
    }

    #[test]
    fn identical_tight_tasks_are_split() {
        // Both at x=50, due 55: one agent can serve only one.
        let o = oracle(fleet(&[(50.0, 0.0, 55.0), (50.0, 0.0, 55.0)], 2, 0.0));
        let (value, assignment) = brute_force_opt(&o).unwrap();
        assert_eq!(value, 2.0);
        assert_eq!(assignment.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 1]);
    }

    #[test]
    fn caps_are_enforced() {
        let inst = generate_instance(&GenerationConfig::new(5, 2, 0.0, 1)).unwrap();
        let o = oracle(inst);
        assert!(matches!(brute_force_opt(&o), Err(PropertyError::SizeCap { .. })));
    }

    #[test]
    fn schedules_match_tables() {
        let inst = generate_instance(&GenerationConfig::new(3, 1, 0.1, 4)).unwrap();
        let quad = build_quadrature(inst.speed_model(), 3).unwrap();
        let o = SetValueOracle::new(Arc::new(inst.clone()), quad.clone(), 2.0).unwrap();
        for s in TaskSet::first_n(3).subsets() {
            let e = enumerate_schedules(&inst, 0, s, &quad, Some(2.0)).unwrap();
            assert!((e - o.value(0, s).unwrap()).abs() <= VALUE_TOLERANCE);
        }
        let table = o.policy_table(0, TaskSet::first_n(3)).unwrap();
        assert!(check_bellman(&table, 200, 1).unwrap().passed());
    }
}
