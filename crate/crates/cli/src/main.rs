//! `pspin` — batch front-end for the p-spin ground-state solver.
//!
//! Every subcommand reads one TOML configuration, derives all randomness
//! from its root seed, and writes its artifacts (JSON records, CSV tables,
//! the resolved configuration, and a timing sidecar) into the output
//! directory. Exit code: 0 on pass, 1 when any check failed or a run error
//! occurred, 2 on configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    /// Unparseable or invalid configuration (exit code 2).
    Config(String),
    /// A computation failed after a valid configuration (exit code 1).
    Run(String),
}

#[derive(Parser)]
#[command(
    name = "pspin",
    version,
    about = "Ground-state energy of mixed p-spin models: solve, optimize, sweep, verify, oracle, compare"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configuration's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configuration's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread count (RAYON_NUM_THREADS is honored when absent).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Echo the primary JSON artifact to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate the functional at a fixed order parameter.
    Solve,
    /// Minimize over step order parameters, scanning jump counts.
    Optimize,
    /// Finite-temperature functional along a β ladder at fixed γ.
    SweepBeta,
    /// Monte Carlo verification of the control representation.
    VerifyControl,
    /// Exact finite-N disorder averages and extrapolation.
    Oracle,
    /// Optimizer estimate vs. finite-N extrapolation, with pass/fail gate.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Optimize => "optimize",
            Command::SweepBeta => "sweep-beta",
            Command::VerifyControl => "verify-control",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
        }
    }
}

fn main() {
    let code = match run() {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(Failure::Run(msg)) => {
            eprintln!("run error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn run() -> Result<bool, Failure> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Run(format!("thread pool: {e}")))?;
    }
    let path = cli
        .config
        .ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }

    let started = Instant::now();
    let output = match cli.command {
        Command::Solve => commands::cmd_solve(&cfg),
        Command::Optimize => commands::cmd_optimize(&cfg),
        Command::SweepBeta => commands::cmd_sweep_beta(&cfg),
        Command::VerifyControl => commands::cmd_verify_control(&cfg),
        Command::Oracle => commands::cmd_oracle(&cfg),
        Command::Compare => commands::cmd_compare(&cfg),
    }?;
    let wall_ms = started.elapsed().as_millis() as u64;

    let io_err = |e: std::io::Error| Failure::Run(format!("writing outputs: {e}"));
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    std::fs::write(cfg.out.join("resolved.toml"), cfg.to_toml()).map_err(io_err)?;
    for (name, bytes) in &output.files {
        std::fs::write(cfg.out.join(name), bytes).map_err(io_err)?;
    }
    // Timing lives only in this sidecar so the result files stay replayable.
    let meta = serde_json::json!({
        "command": cli.command.name(),
        "wall_ms": wall_ms,
        "pass": output.pass,
    });
    std::fs::write(cfg.out.join("run_meta.json"), format!("{meta:#}\n")).map_err(io_err)?;

    if cli.json {
        print!("{}", output.primary);
    }
    if !output.pass {
        eprintln!("{}: checks failed", cli.command.name());
    }
    Ok(output.pass)
}
