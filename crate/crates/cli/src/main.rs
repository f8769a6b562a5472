//! `moo`: run solvers, sweeps, scans and benchmarks from the shell.
//!
//! Exit codes: 0 success, 1 solver failure, 2 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use moo_homotopy::bench::{literature_check, run_bench, BenchConfig};
use moo_homotopy::nsga2::{evolve, GaConfig};
use moo_homotopy::problem::SamplingBox;
use moo_homotopy::registry::{defaults, get_problem, BenchmarkDefaults, PROBLEM_NAMES};
use moo_homotopy::report::{write_reports_csv, Method, SolveReport};
use moo_homotopy::sampling::{grid_feasibility_scan, projected_cloud, uniform_feasibility_scan, write_metrics_csv, PointCloud};
use moo_homotopy::scalarization::{
    epsilon_constraint_front, epsilon_constraint_solve, global_criterion_solve, lexicographic_solve,
    weighted_sum_front, weighted_sum_solve, EpsilonGrid, FrontSet, GcmConfig, ScaleSource, WeightGrid,
};
use moo_homotopy::tracker::{pareto_front_homotopy, solve_homotopy, TrackerConfig};
use moo_homotopy::{EvalCounters, ProblemDefinition, Vector};
use serde::Serialize;

/// Distinct-point tolerance used when summarizing fronts.
const DISTINCT_TOL: f64 = 1e-6;
/// Largest grid a `sample --kind grid` run will evaluate.
const MAX_GRID_NODES: u128 = 100_000_000;

#[derive(Parser)]
#[command(name = "moo", version, about = "Constrained multiobjective optimization by homotopy continuation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method once and write its report.
    Solve(SolveArgs),
    /// Sweep weights or ε bounds and write the nondominated front.
    Front(FrontArgs),
    /// Write feasibility scans or projected clouds for plotting.
    Sample(SampleArgs),
    /// Run all six methods with registered defaults.
    Bench(BenchArgs),
    /// Recompute the published candidate points for ex2_5d.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Registered problem name.
    #[arg(long, default_value = "ex2_5d")]
    problem: String,
    /// Output directory.
    #[arg(long, env = "MOO_OUT_DIR", default_value = "moo-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run independent weights or samples on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct Start {
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Initial inequality multipliers for homotopy runs.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u0: Option<Vec<f64>>,
}

#[derive(Args)]
struct GaArgs {
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Equality slack for constraint domination.
    #[arg(long)]
    delta_h: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Objective weights, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w: Option<Vec<f64>>,
    #[command(flatten)]
    start: Start,
    /// ε bounds, one per objective; the primary entry is ignored.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    /// Primary objective for ecm, 1-based.
    #[arg(long)]
    primary: Option<usize>,
    /// Norm exponent for gcm.
    #[arg(long)]
    norm_p: Option<f64>,
    /// Use unit scales instead of cloud ranges for gcm.
    #[arg(long)]
    unit_scales: bool,
    /// Objective order for lex, 1-based.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-6)]
    tol_lex: f64,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FrontArgs {
    /// homotopy, wsm, ecm or nsga2.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Number of interior weights for homotopy and wsm.
    #[arg(long, default_value_t = 50)]
    weights_count: usize,
    /// Number of ε levels for ecm.
    #[arg(long, default_value_t = 20)]
    eps_grid: usize,
    /// Projected points used to place the ε levels.
    #[arg(long, default_value_t = 1000)]
    cloud_size: usize,
    #[command(flatten)]
    start: Start,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleKind {
    Scan,
    Grid,
    Projection,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum, default_value_t = SampleKind::Scan)]
    kind: SampleKind,
    /// Uniform samples for scan and projection.
    #[arg(long, default_value_t = 20_000)]
    count: usize,
    /// Equality tolerances, one output file each.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
    eps: Vec<f64>,
    /// Grid nodes per coordinate; a single value applies to all.
    #[arg(long, value_delimiter = ',', default_value = "4000")]
    nodes: Vec<usize>,
    /// Box lower corner; defaults to the problem's box.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    upper: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Solver(e.into())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Front(a) => cmd_front(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Check(a) => cmd_check(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

struct Setup {
    problem: ProblemDefinition,
    defaults: BenchmarkDefaults,
}

fn setup(name: &str) -> Result<Setup, Failure> {
    match (get_problem(name), defaults(name)) {
        (Ok(problem), Ok(defaults)) => Ok(Setup { problem, defaults }),
        _ => usage(format!("unknown problem `{name}` (expected one of {})", PROBLEM_NAMES.join(", "))),
    }
}

fn vector(name: &str, given: Option<&[f64]>, fallback: &[f64], len: usize) -> Result<Vector, Failure> {
    let v = given.unwrap_or(fallback);
    if v.len() != len {
        return usage(format!("--{name} needs {len} values, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return usage(format!("--{name} values must be finite"));
    }
    Ok(Vector::from_column_slice(v))
}

fn weights(given: Option<&[f64]>, fallback: &[f64], p: usize) -> Result<Vector, Failure> {
    let w = vector("w", given, fallback, p)?;
    if w.iter().any(|&x| x < 0.0) || w.sum() <= 0.0 {
        return usage("--w needs nonnegative weights with a positive sum");
    }
    Ok(&w / w.sum())
}

fn ga_config(a: &GaArgs, d: &BenchmarkDefaults, c: &Common) -> Result<GaConfig, Failure> {
    let cfg = GaConfig {
        population: a.population.unwrap_or(d.nsga_population),
        generations: a.generations.unwrap_or(d.nsga_generations),
        delta_h: a.delta_h.unwrap_or(GaConfig::default().delta_h),
        seed: c.seed,
        parallel: c.parallel,
        ..GaConfig::default()
    };
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    Ok(cfg)
}

fn create(dir: &Path, file: &str) -> anyhow::Result<(BufWriter<File>, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(file);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((BufWriter::new(f), path))
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> anyhow::Result<PathBuf> {
    let (mut w, path) = create(dir, file)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn fmt_vec(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    problem: &'a str,
    method: Method,
    success: bool,
    status: &'a str,
    message: String,
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let c = &a.common;
    let Setup { problem, defaults: d } = setup(&c.problem)?;
    let (n, p, m) = (problem.n(), problem.p(), problem.m());
    let method = a.method;
    let x0_default = if method == Method::Homotopy { &d.homotopy_x0 } else { &d.x0 };
    let x0 = vector("x0", a.start.x0.as_deref(), x0_default, n)?;
    let mut counters = EvalCounters::new(p);
    let stem = format!("solve_{}_{}", c.problem, method);
    let mut extra: Vec<PathBuf> = Vec::new();

    let outcome: anyhow::Result<SolveReport> = match method {
        Method::Homotopy => {
            let w = weights(a.w.as_deref(), &d.weights, p)?;
            let u0 = vector("u0", a.start.u0.as_deref(), &vec![1.0; m], m)?;
            if u0.iter().any(|&u| u <= 0.0) {
                return usage("--u0 entries must be positive");
            }
            match solve_homotopy(&problem, &x0, &w, &u0, &TrackerConfig::default(), &mut counters) {
                Ok((report, trace)) => {
                    let (f, path) = create(&c.out, &format!("{stem}_path.csv"))?;
                    trace.write_csv(f)?;
                    extra.push(path);
                    Ok(report)
                }
                Err(e) => Err(e.into()),
            }
        }
        Method::Wsm => {
            let w = weights(a.w.as_deref(), &d.weights, p)?;
            weighted_sum_solve(&problem, &w, &x0, &mut counters).map_err(Into::into)
        }
        Method::Ecm => {
            let primary = a.primary.unwrap_or(d.epsilon_primary + 1);
            if primary == 0 || primary > p {
                return usage(format!("--primary must be in 1..={p}"));
            }
            let eps = match &a.eps {
                Some(e) if e.len() == p => Vector::from_column_slice(e),
                Some(e) => return usage(format!("--eps needs {p} values, got {}", e.len())),
                None => Vector::from_column_slice(&d.epsilon_bounds),
            };
            epsilon_constraint_solve(&problem, primary - 1, &eps, &x0, &mut counters).map_err(Into::into)
        }
        Method::Gcm => {
            let mut cfg = GcmConfig::default();
            if let Some(np) = a.norm_p {
                if !(np >= 1.0 && np.is_finite()) {
                    return usage("--norm-p must be a finite value of at least 1");
                }
                cfg.norm_p = np;
            }
            if a.w.is_some() {
                cfg.weights = Some(weights(a.w.as_deref(), &d.weights, p)?);
            }
            if a.unit_scales {
                cfg.scales = ScaleSource::Unit;
            } else if let ScaleSource::Cloud { size, .. } = cfg.scales {
                cfg.scales = ScaleSource::Cloud { size, seed: c.seed };
            }
            global_criterion_solve(&problem, &x0, &cfg, &mut counters).map_err(Into::into)
        }
        Method::Lex => {
            let order: Vec<usize> = a.order.clone().unwrap_or_else(|| (1..=p).collect());
            if order.is_empty() || order.iter().any(|&k| k == 0 || k > p) {
                return usage(format!("--order entries must be in 1..={p}"));
            }
            let zero_based: Vec<usize> = order.iter().map(|k| k - 1).collect();
            lexicographic_solve(&problem, &zero_based, a.tol_lex, &x0, &mut counters)
                .map(|r| r.report)
                .map_err(Into::into)
        }
        Method::Nsga2 => {
            let cfg = ga_config(&a.ga, &d, c)?;
            let w = weights(a.w.as_deref(), &d.weights, p)?;
            match evolve(&problem, &cfg, &mut counters) {
                Ok(run) => {
                    let (f, path) = create(&c.out, &format!("{stem}_population.csv"))?;
                    run.write_population_csv(f)?;
                    extra.push(path);
                    run.best_report(&problem, &w).map_err(Into::into)
                }
                Err(e) => Err(e.into()),
            }
        }
    };

    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            let path = write_json(
                &c.out,
                &format!("{stem}_error.json"),
                &ErrorReport {
                    problem: &c.problem,
                    method,
                    success: false,
                    status: "error",
                    message: format!("{e:#}"),
                },
            )?;
            return Err(Failure::Solver(e.context(format!("{method} failed; wrote {}", path.display()))));
        }
    };
    let path = match c.format {
        Format::Json => write_json(&c.out, &format!("{stem}.json"), &report)?,
        Format::Csv => {
            let (f, path) = create(&c.out, &format!("{stem}.csv"))?;
            write_reports_csv(std::slice::from_ref(&report), [n, p, m, problem.s()], f)?;
            path
        }
    };
    println!(
        "{method} {} f={} kkt={:.3e} f_evals={} h_evals={} -> {}",
        report.status,
        fmt_vec(&report.f),
        report.kkt_residual,
        report.counters.max_objective(),
        report.counters.homotopy_maps,
        path.display()
    );
    for e in extra {
        println!("  also wrote {}", e.display());
    }
    if report.success {
        Ok(())
    } else {
        Err(Failure::Solver(anyhow::anyhow!("{method} stopped with status {}", report.status)))
    }
}

fn cmd_front(a: FrontArgs) -> Result<(), Failure> {
    let c = &a.common;
    let Setup { problem, defaults: d } = setup(&c.problem)?;
    let (n, p, m) = (problem.n(), problem.p(), problem.m());
    let method = a.method;
    let mut counters = EvalCounters::new(p);
    let weight_grid = || -> Result<WeightGrid, Failure> {
        if a.weights_count == 0 {
            return usage("--weights-count must be at least 1");
        }
        WeightGrid::uniform(p, a.weights_count).map_err(|e| Failure::Usage(e.to_string()))
    };

    let set: anyhow::Result<FrontSet> = match method {
        Method::Homotopy => {
            let grid = weight_grid()?;
            let x0 = vector("x0", a.start.x0.as_deref(), &d.homotopy_x0, n)?;
            let u0 = vector("u0", a.start.u0.as_deref(), &vec![1.0; m], m)?;
            pareto_front_homotopy(&problem, grid.weights(), &x0, &u0, &TrackerConfig::default(), c.parallel, &mut counters)
                .map(|reports| FrontSet::assemble(&problem, reports))
                .map_err(Into::into)
        }
        Method::Wsm => {
            let grid = weight_grid()?;
            let x0 = vector("x0", a.start.x0.as_deref(), &d.x0, n)?;
            weighted_sum_front(&problem, &grid, &x0, c.parallel, &mut counters).map_err(Into::into)
        }
        Method::Ecm => {
            if a.eps_grid == 0 {
                return usage("--eps-grid must be at least 1");
            }
            if a.cloud_size == 0 {
                return usage("--cloud-size must be at least 1");
            }
            let x0 = vector("x0", a.start.x0.as_deref(), &d.x0, n)?;
            projected_cloud(&problem, problem.sampling_box(), a.cloud_size, c.seed, c.parallel, &mut counters)
                .map_err(anyhow::Error::from)
                .and_then(|cloud| {
                    EpsilonGrid::from_cloud(&cloud.objectives(), d.epsilon_primary, a.eps_grid).map_err(Into::into)
                })
                .and_then(|grid| {
                    epsilon_constraint_front(&problem, &grid, &x0, c.parallel, &mut counters).map_err(Into::into)
                })
        }
        Method::Nsga2 => {
            let cfg = ga_config(&a.ga, &d, c)?;
            evolve(&problem, &cfg, &mut counters).map(|r| r.front).map_err(Into::into)
        }
        Method::Gcm | Method::Lex => return usage(format!("front supports homotopy, wsm, ecm and nsga2, not {method}")),
    };
    let set = set.map_err(|e| Failure::Solver(e.context(format!("{method} front failed"))))?;

    let stem = format!("front_{}_{}", c.problem, method);
    let path = match c.format {
        Format::Json => write_json(&c.out, &format!("{stem}.json"), &set)?,
        Format::Csv => {
            let (f, path) = create(&c.out, &format!("{stem}.csv"))?;
            set.write_csv(f)?;
            path
        }
    };
    let (f, runs_path) = create(&c.out, &format!("{stem}_runs.csv"))?;
    set.write_runs_csv(f)?;
    for s in &set.skipped {
        eprintln!("skipped {}: {}", s.params, s.note);
    }
    println!(
        "{method} front: {} runs, {} kept, {} distinct, f_evals={} h_evals={} -> {}",
        set.runs.len().max(set.entries.len() + set.skipped.len()),
        set.entries.len(),
        set.distinct(DISTINCT_TOL).len(),
        counters.max_objective(),
        counters.homotopy_maps,
        path.display()
    );
    println!("  also wrote {}", runs_path.display());
    Ok(())
}

fn sampling_box(a: &SampleArgs, problem: &ProblemDefinition) -> Result<SamplingBox, Failure> {
    let b = problem.sampling_box();
    let lower = a.lower.clone().unwrap_or_else(|| b.lower.clone());
    let upper = a.upper.clone().unwrap_or_else(|| b.upper.clone());
    if lower.len() != problem.n() || upper.len() != problem.n() {
        return usage(format!("--lower and --upper need {} values", problem.n()));
    }
    SamplingBox::new(lower, upper).or_else(|e| usage(e.to_string()))
}

fn cmd_sample(a: SampleArgs) -> Result<(), Failure> {
    let c = &a.common;
    let Setup { problem, .. } = setup(&c.problem)?;
    let (n, p) = (problem.n(), problem.p());
    let bx = sampling_box(&a, &problem)?;
    if a.kind != SampleKind::Grid && a.count == 0 {
        return usage("--count must be at least 1");
    }
    if a.eps.is_empty() || a.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return usage("--eps values must be positive");
    }
    let nodes: Vec<usize> = match a.nodes.len() {
        1 => vec![a.nodes[0]; n],
        k if k == n => a.nodes.clone(),
        k => return usage(format!("--nodes needs 1 or {n} values, got {k}")),
    };
    if a.kind == SampleKind::Grid {
        if nodes.iter().any(|&k| k < 2) {
            return usage("--nodes values must be at least 2");
        }
        let total = nodes.iter().try_fold(1u128, |acc, &k| acc.checked_mul(k as u128));
        if total.is_none_or(|t| t > MAX_GRID_NODES) {
            return usage(format!("grid larger than {MAX_GRID_NODES} nodes; lower --nodes"));
        }
    }

    let mut counters = EvalCounters::new(p);
    let write = |cloud: &PointCloud, stem: String| -> Result<PathBuf, Failure> {
        let path = match c.format {
            Format::Json => write_json(&c.out, &format!("{stem}.json"), cloud)?,
            Format::Csv => {
                let (f, path) = create(&c.out, &format!("{stem}.csv"))?;
                cloud.write_csv(f, n, p)?;
                path
            }
        };
        Ok(path)
    };
    match a.kind {
        SampleKind::Projection => {
            let cloud = projected_cloud(&problem, &bx, a.count, c.seed, c.parallel, &mut counters)
                .map_err(|e| Failure::Solver(e.into()))?;
            let path = write(&cloud, format!("sample_{}_projected", c.problem))?;
            println!(
                "projection: {} of {} kept ({} failures) -> {}",
                cloud.meta.retained,
                cloud.meta.attempted,
                cloud.meta.failures,
                path.display()
            );
        }
        SampleKind::Scan | SampleKind::Grid => {
            for &eps in &a.eps {
                let (label, cloud) = if a.kind == SampleKind::Scan {
                    let cloud = uniform_feasibility_scan(&problem, &bx, a.count, eps, c.seed, c.parallel, &mut counters);
                    ("scan", cloud)
                } else {
                    ("grid", grid_feasibility_scan(&problem, &bx, &nodes, eps, c.parallel, &mut counters))
                };
                let cloud = cloud.map_err(|e| Failure::Solver(e.into()))?;
                let path = write(&cloud, format!("sample_{}_{label}_eps{eps}", c.problem))?;
                println!(
                    "{label} eps={eps}: {} of {} kept -> {}",
                    cloud.meta.retained,
                    cloud.meta.attempted,
                    path.display()
                );
            }
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let c = &a.common;
    setup(&c.problem)?;
    let cfg = BenchConfig {
        seed: c.seed,
        parallel: c.parallel,
        ..BenchConfig::default()
    };
    let b = run_bench(&c.problem, &cfg).map_err(|e| Failure::Solver(e.into()))?;
    for row in &b.rows {
        match (&row.report, &row.error) {
            (Some(r), _) => println!(
                "{:>8} {:<24} f={} kkt={:.3e} f_evals={} h_evals={}",
                row.method.as_str(),
                r.status,
                fmt_vec(&r.f),
                r.kkt_residual,
                r.counters.max_objective(),
                r.counters.homotopy_maps
            ),
            (None, e) => println!("{:>8} error: {}", row.method.as_str(), e.as_deref().unwrap_or("unknown")),
        }
    }
    let stem = format!("bench_{}", c.problem);
    match c.format {
        Format::Json => {
            let path = write_json(&c.out, &format!("{stem}.json"), &b)?;
            println!("wrote {}", path.display());
        }
        Format::Csv => {
            let (f, metrics) = create(&c.out, &format!("{stem}_metrics.csv"))?;
            write_metrics_csv(&b.metrics, f)?;
            let (f, solutions) = create(&c.out, &format!("{stem}_solutions.csv"))?;
            b.write_solutions_csv(f)?;
            println!("wrote {} and {}", metrics.display(), solutions.display());
        }
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    if !(a.tol > 0.0) {
        return usage("--tol must be positive");
    }
    let cells = literature_check(a.tol).map_err(|e| Failure::Solver(e.into()))?;
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&cells).map_err(anyhow::Error::from)?),
        Format::Csv => {
            for cell in &cells {
                println!(
                    "{} {:<8} {:<8} expected {:>10.4} actual {:>10.4}",
                    if cell.pass { "PASS" } else { "FAIL" },
                    cell.point,
                    cell.quantity,
                    cell.expected,
                    cell.actual
                );
            }
        }
    }
    let failed = cells.iter().filter(|c| !c.pass).count();
    println!("check: {}/{} cells pass", cells.len() - failed, cells.len());
    if failed > 0 {
        return Err(Failure::Solver(anyhow::anyhow!("{failed} cells outside tolerance {}", a.tol)));
    }
    Ok(())
}
