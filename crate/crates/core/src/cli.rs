//! Command-line front end.
//!
//! Exit codes: 0 when the run is consistent with the expected theory, 1 for
//! runtime errors, 2 for usage errors, 3 when an internal check is breached.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bellman::{compare_bounds, value_iteration, ExtremalPolicy, GridConfig, ValueTable};
use crate::chain::{
    doob_decompose, exact_expectation, extremal_chain_law, sample_extremal_path, sample_intro_path,
    simulate_intro, ExtremalKernel, IntroKernel,
};
use crate::function_kit::FunctionSpec;
use crate::recursion::{iterate, solve_bound, BoundResult, SolverConfig};
use crate::report::{run_report, ReportConfig};
use crate::shift::{property_scan, ScanConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BREACH: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "compbound",
    version,
    about = "Bounds on the compensator growth of [0,1]-bounded submartingales"
)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Also write the JSON result to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Write the tabular output (trace, table, paths) as CSV.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed-point bound B, or "unbounded".
    Bound(FunctionArg),
    /// Iterate the bound recursion b_n.
    SolveRecursion(RecursionArgs),
    /// Value iteration for c_n = F_n(0,0).
    SolveBellman(BellmanArgs),
    /// c_n from value iteration against b_n from the recursion.
    Compare(BellmanArgs),
    /// Random falsification of the shift inequality.
    TestShift(ShiftArgs),
    /// Exact law and Monte Carlo of two-point chains.
    Simulate(SimulateArgs),
    /// Combined report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FunctionArg {
    /// Function: exp:lambda=<l>, pow:m=<m>, quad or remark2.
    #[arg(long = "f", value_name = "SPEC", value_parser = parse_spec)]
    pub f: FunctionSpec,
}

#[derive(Debug, Args)]
pub struct RecursionArgs {
    #[command(flatten)]
    pub function: FunctionArg,

    /// Stop when |b_n - b_{n-1}| falls below this.
    #[arg(long, value_parser = parse_positive)]
    pub tol: Option<f64>,

    #[arg(long = "max-iter", value_parser = parse_count)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BellmanArgs {
    #[command(flatten)]
    pub function: FunctionArg,

    #[arg(long, default_value_t = 30, value_parser = parse_count)]
    pub horizon: usize,

    /// Grid step in y, decimal or fraction such as 1/512.
    #[arg(long, default_value = "1/512", value_parser = parse_step)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    #[command(flatten)]
    pub function: FunctionArg,

    #[arg(long, default_value_t = 10_000, value_parser = parse_count)]
    pub trials: usize,

    #[arg(long = "max-atoms", default_value_t = 6, value_parser = parse_max_atoms)]
    pub max_atoms: usize,

    #[arg(long = "value-cap", default_value_t = 3.0, value_parser = parse_positive)]
    pub value_cap: f64,

    /// Write the scan report here.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChainKind {
    Intro,
    Extremal,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub chain: ChainKind,

    #[command(flatten)]
    pub function: FunctionArg,

    /// Time horizon of the intro chain.
    #[arg(long, default_value_t = 10, value_parser = parse_count)]
    pub n: usize,

    /// Monte Carlo paths (intro) or dumped sample paths (extremal).
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,

    /// Horizon of the extremal chain.
    #[arg(long, default_value_t = 30, value_parser = parse_count)]
    pub horizon: usize,

    #[arg(long, default_value = "1/512", value_parser = parse_step)]
    pub step: f64,

    /// Policy JSON written by `solve-bellman --json`; computed when absent.
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub function: FunctionArg,

    #[arg(long, default_value_t = 20, value_parser = parse_count)]
    pub horizon: usize,

    #[arg(long, default_value = "1/256", value_parser = parse_step)]
    pub step: f64,

    #[arg(long, default_value_t = 10_000, value_parser = parse_count)]
    pub trials: usize,
}

fn parse_spec(s: &str) -> std::result::Result<FunctionSpec, String> {
    s.parse::<FunctionSpec>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be > 0, got {s}"))
    }
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s
        .parse()
        .map_err(|_| format!("`{s}` is not a nonnegative integer"))?;
    if v == 0 {
        Err("value must be >= 1".into())
    } else {
        Ok(v)
    }
}

fn parse_max_atoms(s: &str) -> std::result::Result<usize, String> {
    let v = parse_count(s)?;
    if v < 2 {
        Err("max-atoms must be >= 2".into())
    } else {
        Ok(v)
    }
}

/// Accepts `0.125` or `1/8`.
pub fn parse_step(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            num / den
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("step must lie in (0, 1], got {s}"))
    }
}

pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args)
}

/// Parses `args` and runs, writing the primary output to `out`. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            if !e.use_stderr() {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match &cli.command {
        Command::Bound(args) => cmd_bound(cli, args, out),
        Command::SolveRecursion(args) => cmd_recursion(cli, args, out),
        Command::SolveBellman(args) => cmd_bellman(cli, args, out),
        Command::Compare(args) => cmd_compare(cli, args, out),
        Command::TestShift(args) => cmd_shift(cli, args, out),
        Command::Simulate(args) => cmd_simulate(cli, args, out),
        Command::Report(args) => {
            let cfg = ReportConfig {
                horizon: args.horizon,
                step: args.step,
                trials: args.trials,
                seed: cli.seed,
            };
            let report = run_report(&args.function.f, &cfg)?;
            emit_json(cli.json.as_deref(), &report, out)?;
            Ok(if report.all_pass {
                EXIT_OK
            } else {
                EXIT_BREACH
            })
        }
    }
}

fn log(cli: &Cli, msg: impl AsRef<str>) {
    if cli.verbose > 0 {
        eprintln!("[compbound] {}", msg.as_ref());
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    if let Some(path) = path {
        write_json_file(path, value)?;
    }
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

#[derive(Serialize)]
struct BoundOutput {
    spec: FunctionSpec,
    #[serde(rename = "B")]
    b: serde_json::Value,
    cross_check_passed: Option<bool>,
    max_g_prime: Option<f64>,
}

fn cmd_bound(cli: &Cli, args: &FunctionArg, out: &mut dyn Write) -> Result<i32> {
    let bound = solve_bound(&args.f, &SolverConfig::default())?;
    let output = match bound {
        BoundResult::Finite {
            b,
            cross_check_passed,
            max_g_prime,
        } => BoundOutput {
            spec: args.f,
            b: serde_json::json!(b),
            cross_check_passed: Some(cross_check_passed),
            max_g_prime: Some(max_g_prime),
        },
        BoundResult::Unbounded => BoundOutput {
            spec: args.f,
            b: serde_json::json!("unbounded"),
            cross_check_passed: None,
            max_g_prime: None,
        },
    };
    emit_json(cli.json.as_deref(), &output, out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RecursionOutput {
    spec: FunctionSpec,
    status: crate::recursion::RecursionStatus,
    steps: usize,
    b_first: f64,
    b_last: f64,
    extrapolated_limit: Option<f64>,
    nondecreasing: bool,
}

fn cmd_recursion(cli: &Cli, args: &RecursionArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = SolverConfig::default();
    if let Some(tol) = args.tol {
        cfg.b_tolerance = tol;
    }
    if let Some(max_iter) = args.max_iter {
        cfg.max_iterations = max_iter;
    }
    log(cli, format!("iterating b_n for {}", args.function.f));
    let trace = iterate(&args.function.f, &cfg)?;

    if let Some(path) = &cli.csv {
        let mut w = csv_writer(path)?;
        w.write_record(["n", "b_n", "a_star"])?;
        for (n, b) in trace.b.iter().enumerate() {
            let a = if n == 0 {
                String::new()
            } else {
                trace.a_star[n - 1].to_string()
            };
            w.write_record([n.to_string(), b.to_string(), a])?;
        }
        w.flush()?;
    }

    let output = RecursionOutput {
        spec: trace.spec,
        status: trace.status,
        steps: trace.steps(),
        b_first: trace.b[0],
        b_last: trace.last(),
        extrapolated_limit: trace.extrapolated_limit(),
        nondecreasing: trace.is_nondecreasing(),
    };
    emit_json(cli.json.as_deref(), &output, out)?;
    Ok(if output.nondecreasing {
        EXIT_OK
    } else {
        EXIT_BREACH
    })
}

#[derive(Serialize)]
struct BellmanOutput {
    spec: FunctionSpec,
    horizon: usize,
    step: f64,
    points: usize,
    c: Vec<f64>,
    grid_error_budget: f64,
    clamped_reads: bool,
    warnings: Vec<String>,
}

fn cmd_bellman(cli: &Cli, args: &BellmanArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = GridConfig::for_horizon(args.horizon, args.step);
    log(
        cli,
        format!("value iteration, {} grid points", grid.points()),
    );
    let table = value_iteration(
        &args.function.f,
        args.horizon,
        &grid,
        &grid.aligned_solver(),
    )?;

    if let Some(path) = &cli.csv {
        let mut w = csv_writer(path)?;
        w.write_record(["n", "y", "value", "action"])?;
        for n in 0..=table.horizon {
            for j in 0..table.points() {
                w.write_record([
                    n.to_string(),
                    table.y_at(j).to_string(),
                    table.values[n][j].to_string(),
                    table.actions[n][j].to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    if let Some(path) = &cli.json {
        write_json_file(path, &table)?;
    }

    let output = BellmanOutput {
        spec: table.spec,
        horizon: table.horizon,
        step: table.grid.step,
        points: table.points(),
        c: (0..=table.horizon).map(|n| table.c(n)).collect(),
        grid_error_budget: table.grid_error_budget(),
        clamped_reads: table.clamped_reads,
        warnings: table.warnings.clone(),
    };
    emit_json(None, &output, out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CompareOutput {
    spec: FunctionSpec,
    horizon: usize,
    step: f64,
    budget: f64,
    max_abs_diff: f64,
    within_budget: bool,
    class_s: bool,
    verdict: &'static str,
    rows: Vec<crate::bellman::CompareRow>,
}

fn cmd_compare(cli: &Cli, args: &BellmanArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = GridConfig::for_horizon(args.horizon, args.step);
    let (cmp, _) = compare_bounds(
        &args.function.f,
        args.horizon,
        &grid,
        &grid.aligned_solver(),
        &SolverConfig::default(),
    )?;

    if let Some(path) = &cli.csv {
        let mut w = csv_writer(path)?;
        w.write_record(["n", "c_n", "b_n", "gap"])?;
        for r in &cmp.rows {
            w.write_record([
                r.n.to_string(),
                r.c_n.to_string(),
                r.b_n.to_string(),
                r.gap.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let verdict = match (cmp.class_s, cmp.within_budget) {
        (_, true) => "c_n <= b_n",
        (false, false) => "c_n > b_n (function not in class S)",
        (true, false) => "breach: c_n > b_n",
    };
    let breach = cmp.class_s && !cmp.within_budget;
    let output = CompareOutput {
        spec: cmp.spec,
        horizon: cmp.horizon,
        step: cmp.step,
        budget: cmp.budget,
        max_abs_diff: cmp.max_abs_diff,
        within_budget: cmp.within_budget,
        class_s: cmp.class_s,
        verdict,
        rows: cmp.rows,
    };
    emit_json(cli.json.as_deref(), &output, out)?;
    Ok(if breach { EXIT_BREACH } else { EXIT_OK })
}

fn cmd_shift(cli: &Cli, args: &ShiftArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = ScanConfig {
        trials: args.trials,
        seed: cli.seed,
        max_atoms: args.max_atoms,
        value_cap: args.value_cap,
    };
    let report = property_scan(&args.function.f, &cfg)?;
    let path = args.report.as_deref().or(cli.json.as_deref());
    emit_json(path, &report, out)?;
    let class_s = args
        .function
        .f
        .class_s_condition(&crate::bellman::standard_class_s_grid())?
        .holds;
    Ok(if class_s && report.violations > 0 {
        EXIT_BREACH
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct ExtremalOutput {
    spec: FunctionSpec,
    horizon: usize,
    law: crate::chain::ChainLaw,
    drifts: Vec<f64>,
    expectation: f64,
    value: f64,
    budget: f64,
    consistent: bool,
    /// Largest spread of a*_n(y) over y, per remaining time n.
    max_action_spread: f64,
}

fn load_policy(path: &Path) -> Result<ValueTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table: ValueTable = serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("parsing policy {}", path.display()))?;
    Ok(table)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = args.function.f;
    match args.chain {
        ChainKind::Intro => {
            if args.paths == 0 {
                anyhow::bail!("--paths must be >= 1 for the intro chain");
            }
            let report = simulate_intro(args.n, args.paths, cli.seed, &spec)?;
            if let Some(path) = &cli.csv {
                let mut w = csv_writer(path)?;
                w.write_record(["path_id", "k", "X", "Y", "M"])?;
                for p in 0..args.paths as u64 {
                    let x = sample_intro_path(args.n, cli.seed, p);
                    let s = doob_decompose(&x, 0.0, &IntroKernel)?;
                    write_path(&mut w, p, &s)?;
                }
                w.flush()?;
            }
            emit_json(cli.json.as_deref(), &report, out)?;
            let ok = report.max_doob_residual <= 1e-12 && report.max_closed_form_residual <= 1e-12;
            Ok(if ok { EXIT_OK } else { EXIT_BREACH })
        }
        ChainKind::Extremal => {
            let table = match &args.policy {
                Some(path) => {
                    let table = load_policy(path)?;
                    if table.spec != spec {
                        anyhow::bail!("policy was computed for {} but --f is {}", table.spec, spec);
                    }
                    table
                }
                None => {
                    let grid = GridConfig::for_horizon(args.horizon, args.step);
                    value_iteration(&spec, args.horizon, &grid, &grid.aligned_solver())?
                }
            };
            let value = table.c(args.horizon.min(table.horizon));
            let budget = table.grid_error_budget();
            let policy = ExtremalPolicy::new(table);
            let (law, drifts) = extremal_chain_law(&policy, args.horizon)?;
            let expectation = exact_expectation(&law, &spec);
            let max_action_spread = (1..=args.horizon)
                .map(|n| policy.action_spread(n))
                .fold(0.0, f64::max);

            if let Some(path) = &cli.csv {
                let mut w = csv_writer(path)?;
                w.write_record(["path_id", "k", "X", "Y", "M"])?;
                let kernel = ExtremalKernel {
                    policy: &policy,
                    horizon: args.horizon,
                };
                for p in 0..args.paths as u64 {
                    let x = sample_extremal_path(&policy, args.horizon, cli.seed, p)?;
                    let s = doob_decompose(&x, 0.0, &kernel)?;
                    write_path(&mut w, p, &s)?;
                }
                w.flush()?;
            }

            let consistent = (expectation - value).abs() <= budget;
            let output = ExtremalOutput {
                spec,
                horizon: args.horizon,
                law,
                drifts,
                expectation,
                value,
                budget,
                consistent,
                max_action_spread,
            };
            emit_json(cli.json.as_deref(), &output, out)?;
            Ok(if consistent { EXIT_OK } else { EXIT_BREACH })
        }
    }
}

fn write_path(w: &mut csv::Writer<File>, path_id: u64, s: &crate::chain::PathSample) -> Result<()> {
    for k in 0..s.x.len() {
        w.write_record([
            path_id.to_string(),
            k.to_string(),
            s.x[k].to_string(),
            s.y[k].to_string(),
            s.m[k].to_string(),
        ])?;
    }
    Ok(())
}
