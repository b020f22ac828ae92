//! `pdlab`: verification campaigns, chain dumps, solves and continuation
//! sweeps driven by one flat JSON configuration per run.
//!
//! Precedence: command-line flags override configuration keys, which
//! override built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pdlab::config::{RunConfig, SpecialConfig, TOOL_VERSION};
use pdlab::error::Error;
use pdlab::solver::{
    continuation_sweep, diagnostics_csv, solve_document, solve_parabolic, solve_steady, sweep_csv, trajectory_bytes,
    ProblemSpec, SteadySpec,
};
use pdlab::verify::{default_suite_config, run_suite, SamplerConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "pdlab", version, about = "Laboratory for (p, delta)-structure operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the random sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (for approx-dump also a `.json` file path).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// First threshold of the special chain; replaces any configured chain.
    #[arg(long = "A1")]
    a1: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the inequality checks and write `verify_report.json`.
    Verify(Common),
    /// Build a chain and write its coefficients.
    ApproxDump(Common),
    /// Implicit Euler solve; writes `solve.json`, `diagnostics.csv` and
    /// optionally `trajectory.bin`.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the nodal trajectory.
        #[arg(long)]
        trajectory: bool,
    },
    /// Steady solve; writes `steady.json`.
    Steady(Common),
    /// Re-solve over a schedule of first thresholds; writes `sweep.csv` and
    /// `sweep.json`.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated increasing first thresholds.
        #[arg(long = "A-schedule", value_delimiter = ',', required = true)]
        a_schedule: Vec<f64>,
    },
}

/// Exit status: 0 success, 1 check failure or nonconvergence, 2 bad
/// configuration.
enum Failure {
    Checks,
    Solve(anyhow::Error),
    Config(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NewtonDivergence { .. }
            | Error::CgBreakdown(_)
            | Error::Step { .. }
            | Error::Convergence(_)
            | Error::Quadrature { .. } => Failure::Solve(e.into()),
            other => Failure::Config(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Solve(e)
    }
}

fn load_config(common: &Common, fallback: RunConfig) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => fallback,
    };
    if let Some(p) = common.p {
        cfg.p = Some(pdlab::config::OneOrMany::One(p));
    }
    if let Some(d) = common.delta {
        cfg.delta = Some(pdlab::config::OneOrMany::One(d));
    }
    if let Some(a1) = common.a1 {
        let spacing = cfg.special.as_ref().map_or(1.0, |s| s.spacing);
        cfg.chain = None;
        cfg.special = Some(SpecialConfig { a1, spacing });
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn verify(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common, default_suite_config())?;
    let sampler = SamplerConfig::from_run_config(&cfg, common.seed)?;
    let outcome = run_suite(&cfg, &sampler)?;
    for line in outcome.summary_lines() {
        println!("{line}");
    }
    write(
        &common.out.join("verify_report.json"),
        pretty(&outcome.document(&cfg, &sampler)),
    )?;
    match outcome.exit_code() {
        0 => Ok(()),
        2 => Err(Failure::Config(anyhow::anyhow!(
            "chain construction failed for some targets"
        ))),
        _ => Err(Failure::Checks),
    }
}

fn approx_dump(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common, RunConfig::default())?;
    let (p, delta) = cfg.single_p_delta()?;
    let chain = cfg.build_chain(p, delta)?;
    let doc = json!({
        "tool_version": TOOL_VERSION,
        "config": cfg,
        "chain": chain.to_document(),
        "hat_A": chain.hat_a(),
        "bumps": chain.bumps(),
    });
    let path = if common.out.extension().is_some_and(|e| e == "json") {
        common.out.clone()
    } else {
        common.out.join("chain.json")
    };
    write(&path, pretty(&doc))?;
    println!(
        "q = {:?}, A = {:?} -> {}",
        chain.exponents(),
        chain.thresholds(),
        path.display()
    );
    Ok(())
}

fn solve(common: &Common, trajectory: bool) -> Result<(), Failure> {
    let cfg = load_config(common, RunConfig::default())?;
    let spec = ProblemSpec::from_run_config(&cfg)?;
    let result = solve_parabolic(&spec)?;
    let echo = serde_json::to_value(&cfg).expect("serializable");
    let bin = trajectory.then_some("trajectory.bin");
    if trajectory {
        write(&common.out.join("trajectory.bin"), trajectory_bytes(&result))?;
    }
    write(
        &common.out.join("solve.json"),
        pretty(&solve_document(&spec, &result, &echo, bin)),
    )?;
    let csv = format!(
        "# {TOOL_VERSION}\n# config {echo}\n{}",
        diagnostics_csv(&result.diagnostics)
    );
    write(&common.out.join("diagnostics.csv"), csv)?;
    let last = result.last();
    println!(
        "{} steps, ||u||^2 = {:e}, gradF_accum = {:e}, estimate ratio {:e}",
        last.step, last.l2_sq, last.grad_f_accum, result.estimate_ratio
    );
    Ok(())
}

fn steady(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common, RunConfig::default())?;
    let spec = SteadySpec::from_run_config(&cfg)?;
    let r = solve_steady(&spec)?;
    let doc = json!({
        "tool_version": TOOL_VERSION,
        "config": cfg,
        "chain": spec.chain.to_document(),
        "grid": spec.grid,
        "forcing": spec.forcing.label,
        "F_l2": r.f_l2,
        "gradF_l2": r.grad_f_l2,
        "max_du": r.max_du,
        "newton": r.newton,
    });
    write(&common.out.join("steady.json"), pretty(&doc))?;
    println!(
        "{} Newton iterations, ||F(Du)|| = {:e}, ||grad F(Du)|| = {:e}",
        r.newton.iterations, r.f_l2, r.grad_f_l2
    );
    Ok(())
}

fn sweep(common: &Common, schedule: &[f64]) -> Result<(), Failure> {
    let cfg = load_config(common, RunConfig::default())?;
    let spec = ProblemSpec::from_run_config(&cfg)?;
    let spacing = cfg.special.as_ref().map_or(1.0, |s| s.spacing);
    let result = continuation_sweep(&spec, schedule, spacing)?;
    let echo = serde_json::to_value(&cfg).expect("serializable");
    let csv = format!("# {TOOL_VERSION}\n# config {echo}\n{}", sweep_csv(&result));
    write(&common.out.join("sweep.csv"), csv)?;
    let summary: serde_json::Map<String, Value> =
        result.last_change.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let doc = json!({
        "tool_version": TOOL_VERSION,
        "config": echo,
        "A_schedule": schedule,
        "rows": result.rows,
        "last_two_relative_change": summary,
    });
    write(&common.out.join("sweep.json"), pretty(&doc))?;
    for row in &result.rows {
        match (&row.last, &row.error) {
            (Some(d), _) => println!(
                "A1 = {}: gradF_accum = {:e}, diff_prev = {:?}",
                row.a1, d.grad_f_accum, row.diff_prev
            ),
            (None, Some(e)) => println!("A1 = {}: failed: {e}", row.a1),
            (None, None) => {}
        }
    }
    match result.max_last_change() {
        Some(m) => println!("largest relative change over the last two entries: {m:e}"),
        None => println!("fewer than two successful entries; no stabilization summary"),
    }
    if result.rows.iter().any(|r| r.error.is_some()) {
        return Err(Failure::Solve(anyhow::anyhow!("some schedule entries failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = match &cli.command {
        Command::Verify(c) | Command::ApproxDump(c) | Command::Steady(c) => c,
        Command::Solve { common, .. } | Command::Sweep { common, .. } => common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")
            .map_err(Failure::Config)?;
    }
    match &cli.command {
        Command::Verify(c) => verify(c),
        Command::ApproxDump(c) => approx_dump(c),
        Command::Solve { common, trajectory } => solve(common, *trajectory),
        Command::Steady(c) => steady(c),
        Command::Sweep { common, a_schedule } => sweep(common, a_schedule),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Solve(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
