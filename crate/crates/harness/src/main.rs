use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stochauction_core::auction::Topology;
use stochauction_core::{generate_instance, parse_instance, serialize_instance, GenerationConfig, MissionInstance};
use stochauction_harness::experiment::{
    bench_rows, bench_samples, coordinate_method, instance_rows, run_experiment, summarize, thread_pool, write_rows,
    BenchConfig, ExperimentConfig, ExperimentError, Method, MethodSettings,
};
use stochauction_harness::properties::{
    convergence_suite, monotonicity_suite, optimality_suite, oracle_suite, submodularity_suite, OptimalityReport,
    PropertyError, PropertyReport, SuiteConfig,
};

#[derive(Parser)]
#[command(
    name = "stochauction",
    version,
    about = "Auction-based task allocation under stochastic travel times"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Coordination method(s), comma separated: auction, cbba, robust-cbba.
    #[arg(long, global = true, value_delimiter = ',')]
    method: Vec<Method>,
    /// Speed variance σ², or a comma-separated grid where a sweep allows it.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    sigma: Vec<f64>,
    /// Time grid step in minutes.
    #[arg(long, global = true, default_value_t = 1.0)]
    grid: f64,
    /// Quadrature nodes per speed expectation.
    #[arg(long, global = true)]
    quadrature: Option<usize>,
    /// Scenario count of robust CBBA.
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    /// Enable bid wrapping (default).
    #[arg(long, global = true, overrides_with = "no_wrap")]
    wrap: bool,
    /// Disable bid wrapping.
    #[arg(long = "no-wrap", global = true, overrides_with = "wrap")]
    no_wrap: bool,
    /// Communication graph: complete, ring, line or random:<seed>.
    #[arg(long, global = true)]
    topology: Option<Topology>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave wall-time fields empty.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Per-agent capacity; defaults to ceil(n/m) + 1.
        #[arg(long)]
        capacity: Option<usize>,
    },
    /// Coordinate one instance with one method and print the allocation.
    Solve { instance: PathBuf },
    /// Roll allocations out on sampled travel times and write result rows.
    Validate {
        /// Instance file; a generated sweep is run when absent.
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        #[command(flatten)]
        sweep: Sweep,
        /// Write per-dimension summaries instead of per-instance rows.
        #[arg(long)]
        summary: bool,
    },
    /// Score-evaluation counters and wall times across task counts.
    Bench {
        #[command(flatten)]
        sweep: Sweep,
        /// Let every agent hold all tasks.
        #[arg(long)]
        full_capacity: bool,
        /// Extra timed coordination runs per instance; the fastest is reported.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Run a property suite; exits 1 on any violation.
    Check {
        #[arg(long, value_enum)]
        property: Property,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Task counts to draw from.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        agents: Option<usize>,
        /// Bellman states sampled per agent table.
        #[arg(long, default_value_t = 10)]
        states: usize,
    },
}

#[derive(Args)]
struct Sweep {
    /// Task counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    agents: usize,
    /// Instances per task count.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Per-agent capacity override.
    #[arg(long)]
    capacity: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Submodularity,
    Monotonicity,
    Optimality,
    Convergence,
    Bellman,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Instance(#[from] stochauction_core::instance::InstanceError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Experiment(_) => "experiment",
            CliError::Property(_) => "property",
            CliError::Instance(_) => "instance",
            CliError::Io { .. } => "io",
            CliError::Violation(_) => "violation",
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Global {
    fn settings(&self) -> MethodSettings {
        MethodSettings {
            robust_samples: self.samples,
            quadrature: self.quadrature.unwrap_or(8),
            grid_step: self.grid,
            wrapping: !self.no_wrap,
            topology: self.topology.unwrap_or(Topology::Complete),
            ..MethodSettings::default()
        }
    }

    fn methods(&self) -> Vec<Method> {
        if self.method.is_empty() {
            Method::ALL.to_vec()
        } else {
            self.method.clone()
        }
    }

    fn sigma_grid(&self, default: &[f64]) -> Vec<f64> {
        if self.sigma.is_empty() {
            default.to_vec()
        } else {
            self.sigma.clone()
        }
    }

    fn single_sigma(&self, default: f64) -> Result<f64, CliError> {
        match self.sigma.as_slice() {
            [] => Ok(default),
            [s] => Ok(*s),
            _ => Err(CliError::Usage("this subcommand takes a single --sigma".into())),
        }
    }

    fn emit(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(path) => fs::write(path, bytes).map_err(io_error(path)),
            None => io::stdout().write_all(bytes).map_err(io_error(Path::new("<stdout>"))),
        }
    }

    fn emit_csv<R: Serialize>(&self, rows: &[R]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_rows(&mut buf, rows)?;
        self.emit(&buf)
    }
}

fn read_instance(path: &Path) -> Result<MissionInstance, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    Ok(parse_instance(&text)?)
}

#[derive(Serialize)]
struct SolveOutput {
    method: Method,
    instance_seed: u64,
    assignment: Vec<Vec<usize>>,
    paths: Vec<Vec<usize>>,
    unassigned: Vec<usize>,
    per_agent_value: Vec<f64>,
    value_sum: f64,
    /// `value_sum` less the penalty for unassigned tasks.
    expected_reward: f64,
    rounds_to_converge: usize,
    rounds_run: usize,
    score_evaluations: u64,
    wall_time: Option<f64>,
}

fn solve(g: &Global, path: &Path) -> Result<(), CliError> {
    let instance = read_instance(path)?;
    let method = match g.method.as_slice() {
        [] => Method::Auction,
        [m] => *m,
        _ => return Err(CliError::Usage("solve takes a single --method".into())),
    };
    let c = coordinate_method(&instance, method, &g.settings())?;
    let r = &c.result;
    let out = SolveOutput {
        method,
        instance_seed: instance.seed,
        assignment: r.assignment.clone(),
        paths: r.paths.clone(),
        unassigned: r.unassigned.clone(),
        per_agent_value: r.per_agent_value.clone(),
        value_sum: r.per_agent_value.iter().sum(),
        expected_reward: r.expected_reward(&instance),
        rounds_to_converge: r.rounds_to_converge,
        rounds_run: r.rounds_run,
        score_evaluations: r.score_evaluations,
        wall_time: (!g.no_timing).then_some(c.wall_time),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("plain data");
    text.push('\n');
    g.emit(text.as_bytes())
}

fn validate(g: &Global, instance: Option<&Path>, rounds: usize, sweep: &Sweep, summary: bool) -> Result<(), CliError> {
    let mut rows = match instance {
        Some(path) => {
            let instance = read_instance(path)?;
            if rounds == 0 {
                return Err(CliError::Usage("--rounds must be at least 1".into()));
            }
            instance_rows(&instance, 0, &g.methods(), &g.settings(), rounds)
        }
        None => run_experiment(&ExperimentConfig {
            dimensions: sweep.dims.iter().map(|&n| (n, sweep.agents)).collect(),
            sigma_grid: g.sigma_grid(&[0.1]),
            instances_per_dim: sweep.instances,
            rollout_rounds: rounds,
            methods: g.methods(),
            settings: g.settings(),
            capacity: sweep.capacity,
            seed: g.seed,
        })?,
    };
    if g.no_timing {
        rows.iter_mut().for_each(|r| r.wall_time = None);
    }
    if summary {
        let mut summaries = summarize(&rows);
        if g.no_timing {
            summaries.iter_mut().for_each(|s| s.wall_time = 0.0);
        }
        g.emit_csv(&summaries)
    } else {
        g.emit_csv(&rows)
    }
}

fn bench(g: &Global, sweep: &Sweep, full_capacity: bool, repeats: usize) -> Result<(), CliError> {
    if sweep.capacity.is_some() {
        return Err(CliError::Usage("bench takes --full-capacity, not --capacity".into()));
    }
    let cfg = BenchConfig {
        task_counts: sweep.dims.clone(),
        agents: sweep.agents,
        sigma_sq: g.single_sigma(0.1)?,
        instances: sweep.instances,
        methods: g.methods(),
        settings: g.settings(),
        full_capacity,
        timing_repeats: repeats,
        seed: g.seed,
    };
    let samples = bench_samples(&cfg)?;
    let mut rows = bench_rows(&cfg, &samples);
    if g.no_timing {
        for r in &mut rows {
            r.wall_time = 0.0;
            r.offline_time = 0.0;
            r.coordination_time = 0.0;
        }
    }
    g.emit_csv(&rows)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn ratio_line(label: &str, pairs: &[(f64, f64)]) -> String {
    let mut r = OptimalityReport::ratios(pairs);
    r.sort_by(f64::total_cmp);
    format!(
        "{label} ratios n={} min={:.4} p10={:.4} median={:.4} max={:.4}",
        r.len(),
        quantile(&r, 0.0),
        quantile(&r, 0.1),
        quantile(&r, 0.5),
        quantile(&r, 1.0)
    )
}

fn check(
    g: &Global,
    property: Property,
    trials: usize,
    dims: &[usize],
    agents: Option<usize>,
    states: usize,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let default_agents = match property {
        Property::Submodularity => 1,
        Property::Convergence => 4,
        _ => 2,
    };
    let default_dims: &[usize] = match property {
        Property::Convergence => &[2, 3, 4, 5],
        _ => &[2, 3, 4],
    };
    let cfg = SuiteConfig {
        trials,
        task_counts: if dims.is_empty() {
            default_dims.to_vec()
        } else {
            dims.to_vec()
        },
        agents: agents.unwrap_or(default_agents),
        sigma_grid: g.sigma_grid(&[0.0, 0.05, 0.1, 0.2]),
        // Classifying R enumerates Q^(n²) speed combinations.
        quadrature: g.quadrature.unwrap_or(match property {
            Property::Submodularity => 2,
            _ => 8,
        }),
        grid_step: g.grid,
        seed: g.seed,
    };
    let mut lines = Vec::new();
    let passed = match property {
        Property::Submodularity => {
            let suite = submodularity_suite(&cfg, 100 * trials)?;
            lines.push(format!(
                "instances r_submodular={} not_submodular={} unclassified={}",
                suite.r_submodular_instances, suite.other_instances, suite.unclassified_instances
            ));
            for r in [&suite.r_submodular, &suite.other, &suite.unclassified] {
                lines.push(r.summary());
            }
            suite.passed() && suite.r_submodular_instances == trials
        }
        Property::Monotonicity => push_report(&mut lines, monotonicity_suite(&cfg)?),
        Property::Optimality => {
            let report = optimality_suite(&cfg, !g.no_wrap)?;
            lines.push(report.penalized.summary());
            lines.push(ratio_line("penalized", &report.pairs));
            lines.push(report.value_sum.summary());
            lines.push(ratio_line("value-sum", &report.value_pairs));
            report.penalized.passed()
        }
        Property::Convergence => {
            let topologies = match g.topology {
                Some(t) => vec![t],
                None => vec![Topology::Complete, Topology::Ring, Topology::Line],
            };
            push_report(&mut lines, convergence_suite(&cfg, &topologies)?)
        }
        Property::Bellman => {
            let suite = oracle_suite(&cfg, states)?;
            for r in [&suite.enumeration, &suite.bracketing, &suite.bellman] {
                lines.push(r.summary());
            }
            suite.passed()
        }
    };
    let mut text = lines.join("\n");
    text.push('\n');
    g.emit(text.as_bytes())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Violation(format!("{} suite failed", property_name(property))))
    }
}

fn push_report(lines: &mut Vec<String>, report: PropertyReport) -> bool {
    lines.push(report.summary());
    for w in report.witnesses.iter().take(5) {
        lines.push(format!(
            "  witness seed={} agent={} {}",
            w.instance_seed, w.agent, w.detail
        ));
    }
    report.passed()
}

fn property_name(p: Property) -> &'static str {
    match p {
        Property::Submodularity => "submodularity",
        Property::Monotonicity => "monotonicity",
        Property::Optimality => "optimality",
        Property::Convergence => "convergence",
        Property::Bellman => "bellman",
    }
}

fn gen(g: &Global, n: usize, m: usize, capacity: Option<usize>) -> Result<(), CliError> {
    let mut cfg = GenerationConfig::new(n, m, g.single_sigma(0.1)?, g.seed);
    cfg.capacity = capacity;
    let instance = generate_instance(&cfg)?;
    let mut text = serialize_instance(&instance);
    text.push('\n');
    g.emit(text.as_bytes())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen { n, m, capacity } => gen(g, *n, *m, *capacity),
        Command::Solve { instance } => solve(g, instance),
        Command::Validate {
            instance,
            rounds,
            sweep,
            summary,
        } => validate(g, instance.as_deref(), *rounds, sweep, *summary),
        Command::Bench {
            sweep,
            full_capacity,
            repeats,
        } => bench(g, sweep, *full_capacity, *repeats),
        Command::Check {
            property,
            trials,
            dims,
            agents,
            states,
        } => check(g, *property, *trials, dims, *agents, *states),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let pool = thread_pool();
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={message:?}", e.kind());
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                _ => 1,
            })
        }
    }
}
