//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use stochauction_core::auction::{AuctionError, Topology};
use stochauction_core::rng::derive_seed;
use stochauction_core::{generate_instance, GenerationConfig, MissionInstance};
use stochauction_harness::experiment::{
    bench_rows, bench_samples, coordinate_method, run_experiment, BenchConfig, ExperimentConfig, ExperimentError,
    Method, MethodSettings, ResultRow,
};
use stochauction_harness::properties::{
    convergence_suite, monotonicity_suite, optimality_suite, oracle_suite, submodularity_suite, OptimalityReport,
    SuiteConfig,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

const SIGMA_GRID: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Independent check of one allocation: no task twice, no bundle over capacity.
fn allocation_violations(instance: &MissionInstance, assignment: &[Vec<usize>]) -> usize {
    let mut holders = vec![0usize; instance.task_count()];
    let mut bad = 0;
    for (agent, bundle) in assignment.iter().enumerate() {
        if bundle.len() > instance.agents[agent].capacity {
            bad += 1;
        }
        for &j in bundle {
            holders[j] += 1;
        }
    }
    bad + holders.iter().filter(|&&h| h > 1).count()
}

fn conflict_freedom() -> Verdict {
    let settings = MethodSettings::default();
    let (mut runs, mut violations, mut nonconverged) = (0, 0, 0);
    for k in 0..500u64 {
        let n = 2 + (k % 4) as usize;
        let sigma = SIGMA_GRID[(k / 4 % 4) as usize];
        let instance = generate_instance(&GenerationConfig::new(n, 2, sigma, derive_seed(101, &[k]))).unwrap();
        for method in Method::ALL {
            match coordinate_method(&instance, method, &settings) {
                Ok(c) => {
                    runs += 1;
                    violations += allocation_violations(&instance, &c.result.assignment);
                }
                Err(ExperimentError::Auction(AuctionError::NonConvergence(_))) => nonconverged += 1,
                Err(e) => panic!("instance {k} {method}: {e}"),
            }
        }
    }
    verdict(
        violations == 0,
        format!(
            "500 instances x 3 methods, {runs} converged runs, {violations} violations, {nonconverged} not converged"
        ),
    )
}

fn suite(trials: usize, task_counts: Vec<usize>, agents: usize, quadrature: usize, seed: u64) -> SuiteConfig {
    SuiteConfig {
        trials,
        task_counts,
        agents,
        sigma_grid: SIGMA_GRID.to_vec(),
        quadrature,
        grid_step: 1.0,
        seed,
    }
}

fn half_optimality() -> Verdict {
    let report = optimality_suite(&suite(200, vec![2, 3, 4], 2, 8, 202), true).unwrap();
    let mut ratios = OptimalityReport::ratios(&report.pairs);
    ratios.sort_by(f64::total_cmp);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    verdict(
        report.penalized.passed(),
        format!(
            "200 instances, {} below half the optimum; ratio min {:.4} p10 {:.4} median {:.4} mean {:.4} ({} with positive optimum)",
            report.penalized.violations,
            quantile(&ratios, 0.0),
            quantile(&ratios, 0.1),
            quantile(&ratios, 0.5),
            mean,
            ratios.len()
        ),
    )
}

fn value_submodularity() -> Verdict {
    // Two nodes keep the scenario-wise classification of R enumerable.
    let sub = submodularity_suite(&suite(100, vec![2, 3, 4], 1, 2, 303), 10_000).unwrap();
    let mono = monotonicity_suite(&suite(200, vec![2, 3, 4, 5], 2, 8, 304)).unwrap();
    let passed = sub.r_submodular_instances == 100 && sub.r_submodular.passed() && mono.passed();
    verdict(
        passed,
        format!(
            "{} R-submodular instances, {} V violations over {} checks ({} other instances with {} violations, {} unclassified); monotonicity {} violations over {} pairs",
            sub.r_submodular_instances,
            sub.r_submodular.violations,
            sub.r_submodular.trials,
            sub.other_instances,
            sub.other.violations,
            sub.unclassified_instances,
            mono.violations,
            mono.trials
        ),
    )
}

/// Pooled per-method figures over a sweep.
struct Pooled {
    gap: f64,
    finish: f64,
    per_dim: Vec<(usize, f64, f64)>,
}

fn pooled(rows: &[ResultRow], method: Method) -> Pooled {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method && r.is_ok()).collect();
    let mut dims: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in &ok {
        dims.entry(r.n_tasks).or_default().push(r);
    }
    let mut per_dim = Vec::new();
    let mut gap = 0.0;
    for (&n, group) in &dims {
        let count = group.len() as f64;
        let expected = group.iter().map(|r| r.expected_reward.unwrap()).sum::<f64>() / count;
        let actual = group.iter().map(|r| r.actual_reward.unwrap()).sum::<f64>() / count;
        let finish = group.iter().map(|r| r.finish_rate.unwrap()).sum::<f64>() / count;
        gap += (expected - actual).abs();
        per_dim.push((n, (expected - actual).abs(), finish));
    }
    let served: f64 = ok.iter().map(|r| r.finish_rate.unwrap() * r.n_tasks as f64).sum();
    let tasks: f64 = ok.iter().map(|r| r.n_tasks as f64).sum();
    Pooled {
        gap,
        finish: served / tasks,
        per_dim,
    }
}

fn describe(p: &Pooled) -> String {
    let dims: Vec<String> = p
        .per_dim
        .iter()
        .map(|(n, gap, finish)| format!("n{n} gap {gap:.4} finish {finish:.4}"))
        .collect();
    format!("gap {:.4} finish {:.4} [{}]", p.gap, p.finish, dims.join(", "))
}

fn rollout_sweep_rows() -> Vec<ResultRow> {
    run_experiment(&ExperimentConfig {
        dimensions: vec![(2, 2), (3, 2), (4, 2), (5, 2)],
        sigma_grid: vec![0.1],
        instances_per_dim: 100,
        rollout_rounds: 100,
        methods: Method::ALL.to_vec(),
        settings: MethodSettings::default(),
        capacity: None,
        seed: 2024,
    })
    .unwrap()
}

fn expected_vs_actual_trend(rows: &[ResultRow]) -> Verdict {
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    let proposed = pooled(rows, Method::Auction);
    let cbba = pooled(rows, Method::Cbba);
    let robust = pooled(rows, Method::RobustCbba);
    let band = |f: f64| (0.90..=1.00).contains(&f);
    let passed = failed == 0
        && proposed.gap <= cbba.gap
        && proposed.finish >= cbba.finish
        && band(proposed.finish)
        && band(cbba.finish);
    verdict(
        passed,
        format!(
            "proposed {}; cbba {}; robust-cbba {}; {failed} failed rows",
            describe(&proposed),
            describe(&cbba),
            describe(&robust)
        ),
    )
}

fn reward_identity(rows: &[ResultRow]) -> Verdict {
    let worst = rows
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| {
            let f = r.finish_rate.unwrap();
            (r.actual_reward.unwrap() - r.n_tasks as f64 * (2.0 * f - 1.0)).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        worst <= 1e-9,
        format!("{} reports, worst |actual - n(2f - 1)| = {worst:.3e}", rows.len()),
    )
}

fn complexity() -> Verdict {
    let n_samples = 100;
    let settings = MethodSettings {
        robust_samples: n_samples,
        ..MethodSettings::default()
    };
    // Noise-free speeds make both CBBA variants walk the same rounds.
    let counters = BenchConfig {
        task_counts: vec![2, 3, 4, 5],
        agents: 2,
        sigma_sq: 0.0,
        instances: 100,
        methods: Method::ALL.to_vec(),
        settings: settings.clone(),
        full_capacity: true,
        timing_repeats: 5,
        seed: 606,
    };
    let samples = bench_samples(&counters).unwrap();
    let mut exact = true;
    for (n, k, method, outcome) in &samples {
        if *method != Method::RobustCbba {
            continue;
        }
        let plain = samples
            .iter()
            .find(|s| s.0 == *n && s.1 == *k && s.2 == Method::Cbba)
            .and_then(|s| s.3.as_ref().ok());
        match (outcome.as_ref().ok(), plain) {
            (Some(r), Some(p)) => exact &= r.score_evaluations == n_samples as u64 * p.score_evaluations,
            _ => exact = false,
        }
    }
    let rows = bench_rows(&counters, &samples);
    let evals = |n: usize, m: Method| {
        rows.iter()
            .find(|r| r.n_tasks == n && r.method == m)
            .unwrap()
            .score_evaluations as f64
    };
    let count_ratio: Vec<f64> = (2..=5)
        .map(|n| evals(n, Method::Cbba) / evals(n, Method::Auction))
        .collect();

    let timing = BenchConfig {
        sigma_sq: 0.1,
        full_capacity: false,
        methods: vec![Method::Auction, Method::RobustCbba],
        ..counters
    };
    let rows = bench_rows(&timing, &bench_samples(&timing).unwrap());
    let row = |n: usize, m: Method| rows.iter().find(|r| r.n_tasks == n && r.method == m).unwrap();
    let time_ratio: Vec<f64> = (2..=5)
        .map(|n| row(n, Method::RobustCbba).coordination_time / row(n, Method::Auction).coordination_time)
        .collect();
    let total_ratio: Vec<f64> = (2..=5)
        .map(|n| row(n, Method::RobustCbba).wall_time / row(n, Method::Auction).wall_time)
        .collect();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    verdict(
        exact && increasing(&count_ratio) && increasing(&time_ratio),
        format!(
            "robust/cbba counters exactly N={n_samples} per instance: {exact}; cbba/proposed counters n=2..5: {}; robust/proposed coordination time: {}; with the offline value solve included: {}",
            fmt(&count_ratio),
            fmt(&time_ratio),
            fmt(&total_ratio)
        ),
    )
}

fn convergence_bound() -> Verdict {
    let report = convergence_suite(
        &suite(500, vec![2, 3, 4, 5], 4, 8, 707),
        &[Topology::Complete, Topology::Ring, Topology::Line],
    )
    .unwrap();
    let detail = match report.witnesses.first() {
        Some(w) => format!("; first witness seed {} {}", w.instance_seed, w.detail),
        None => String::new(),
    };
    verdict(
        report.passed(),
        format!(
            "500 instances x 3 topologies, {} runs, {} over |Γ|·D{detail}",
            report.trials, report.violations
        ),
    )
}

fn bellman_equivalence() -> Verdict {
    // 50 instances x 2 agents x 10 states = 1000 sampled Bellman states.
    let report = oracle_suite(&suite(50, vec![2, 3, 4], 2, 8, 808), 10).unwrap();
    verdict(
        report.passed() && report.bellman.trials == 1000,
        format!(
            "grid enumeration {} subsets {} off; exact-time bracketing {} subsets {} outside; bellman {} states {} off",
            report.enumeration.trials,
            report.enumeration.violations,
            report.bracketing.trials,
            report.bracketing.violations,
            report.bellman.trials,
            report.bellman.violations
        ),
    )
}

/// Drops wall-time fields so two runs can be compared byte for byte.
fn without_timing(bytes: &[u8]) -> Vec<u8> {
    const TIMED: [&str; 3] = ["wall_time", "offline_time", "coordination_time"];
    if let Ok(mut json) = serde_json::from_slice::<serde_json::Value>(bytes) {
        if let Some(map) = json.as_object_mut() {
            for key in TIMED {
                map.remove(key);
            }
        }
        return serde_json::to_vec(&json).unwrap();
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
    let Ok(header) = reader.headers().cloned() else {
        return bytes.to_vec();
    };
    if !header.iter().any(|h| TIMED.contains(&h)) {
        return bytes.to_vec();
    }
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !TIMED.contains(&&header[i])).collect();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(keep.iter().map(|&i| &header[i])).unwrap();
    for record in reader.records() {
        let record = record.unwrap();
        out.write_record(keep.iter().map(|&i| &record[i])).unwrap();
    }
    out.into_inner().unwrap()
}

fn run_cli(dir: &Path, args: &[&str]) -> (bool, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_stochauction"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    (output.status.success(), output.stdout)
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (ok, _) = run_cli(
        dir.path(),
        &["gen", "--n", "3", "--m", "2", "--seed", "42", "--out", "inst.json"],
    );
    assert!(ok, "gen failed");
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--n", "4", "--m", "2", "--seed", "7", "--sigma", "0.2"],
        vec!["solve", "inst.json", "--method", "auction"],
        vec!["solve", "inst.json", "--method", "cbba", "--topology", "line"],
        vec![
            "solve",
            "inst.json",
            "--method",
            "robust-cbba",
            "--samples",
            "50",
            "--no-wrap",
        ],
        vec!["validate", "inst.json", "--rounds", "50", "--samples", "50"],
        vec![
            "validate",
            "--dims",
            "2,3",
            "--instances",
            "3",
            "--rounds",
            "20",
            "--samples",
            "20",
            "--sigma",
            "0,0.1",
        ],
        vec![
            "validate",
            "--dims",
            "2",
            "--instances",
            "3",
            "--rounds",
            "20",
            "--summary",
            "--method",
            "auction,cbba",
        ],
        vec!["bench", "--dims", "2,3", "--instances", "3", "--samples", "20"],
        vec!["check", "--property", "submodularity", "--trials", "5"],
        vec!["check", "--property", "monotonicity", "--trials", "5"],
        vec!["check", "--property", "optimality", "--trials", "5"],
        vec!["check", "--property", "convergence", "--trials", "5"],
        vec!["check", "--property", "bellman", "--trials", "3", "--quadrature", "4"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let (ok_a, a) = run_cli(dir.path(), args);
        let (ok_b, b) = run_cli(dir.path(), args);
        if !(ok_a && ok_b && !a.is_empty() && without_timing(&a) == without_timing(&b)) {
            differing.push(args.join(" "));
        }
    }
    // Writing through --out gives the same bytes as standard output.
    let (_, stdout) = run_cli(dir.path(), &["solve", "inst.json", "--no-timing"]);
    run_cli(
        dir.path(),
        &["solve", "inst.json", "--no-timing", "--out", "solved.json"],
    );
    let written = std::fs::read(dir.path().join("solved.json")).unwrap_or_default();
    if written != stdout {
        differing.push("solve --out".into());
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} subcommand invocations run twice, differing: {differing:?}",
            commands.len() + 1
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, limit: Option<Duration>, run: &dyn Fn() -> Verdict| {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let passed = v.passed && in_time;
        failures += usize::from(!passed);
        let limit = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
        println!(
            "{} criterion {id}: {} [{:.1}s{limit}]",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    };
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    report(1, minutes(5), &conflict_freedom);
    report(2, minutes(10), &half_optimality);
    report(3, minutes(10), &value_submodularity);
    let start = Instant::now();
    let rows = rollout_sweep_rows();
    let sweep = start.elapsed();
    report(4, minutes(20), &|| {
        let mut v = expected_vs_actual_trend(&rows);
        v.passed &= sweep <= Duration::from_secs(20 * 60);
        v.detail = format!("{}; sweep {:.1}s", v.detail, sweep.as_secs_f64());
        v
    });
    report(5, None, &|| reward_identity(&rows));
    report(6, minutes(15), &complexity);
    report(7, None, &convergence_bound);
    report(8, None, &bellman_equivalence);
    report(9, None, &cli_determinism);
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
