//! `wncs`: config-driven experiments for variable-length packet control.

mod commands;
mod config;
mod report;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::{Context64, PolicySource};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "wncs",
    about = "Variable-length packet transmission for wireless control loops: \
             solver, stability analysis, and Monte Carlo simulation",
    version
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "configs/default.toml")]
    config: PathBuf,

    /// Output directory; defaults to the config's `output.dir`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed-list override, e.g. `1,2,3` or `1..30`.
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// State-space truncation override.
    #[arg(short = 'n', long, global = true)]
    n: Option<usize>,

    /// Action-space truncation override.
    #[arg(short = 'm', long, global = true)]
    m: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the decision process and write the optimal policy.
    Solve,
    /// Evaluate a policy's exact average cost on the truncated chain.
    Evaluate {
        /// Policy CSV produced by `solve`.
        #[arg(long, conflicts_with = "fixed_length")]
        policy: Option<PathBuf>,
        /// Fixed packet length instead of a policy file.
        #[arg(long)]
        fixed_length: Option<usize>,
    },
    /// Per-length stability products and the variable-length verdict.
    Stability,
    /// Monte Carlo closed-loop simulation of a policy.
    Simulate {
        /// Policy CSV produced by `solve`; defaults to solving first.
        #[arg(long, conflicts_with = "fixed_length")]
        policy: Option<PathBuf>,
        /// Fixed packet length instead of a policy file.
        #[arg(long)]
        fixed_length: Option<usize>,
    },
    /// Optimal policies across several state-space truncations.
    Fig2 {
        /// Truncation levels, e.g. `30,50,70`.
        #[arg(long)]
        n_list: Option<String>,
    },
    /// Fixed-length cost curve vs the optimal variable-length policy.
    Fig3,
}

fn build_context(cli: &Cli) -> Result<Context64> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let seeds = match &cli.seeds {
        Some(text) => Some(report::parse_seed_list(text)?),
        None => None,
    };
    let n = cli.n.unwrap_or(cfg.solver.n);
    let m = cli.m.unwrap_or(cfg.solver.m);
    anyhow::ensure!(m >= 1, "M must be >= 1");
    anyhow::ensure!(n >= m, "N={n} must be >= M={m}");
    Ok(Context64 {
        cfg,
        out_dir,
        n,
        m,
        seeds,
    })
}

fn policy_source(policy: &Option<PathBuf>, fixed: &Option<usize>) -> PolicySource {
    match (policy, fixed) {
        (Some(path), _) => PolicySource::Csv(path.clone()),
        (None, Some(l0)) => PolicySource::Fixed(*l0),
        (None, None) => PolicySource::Optimal,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let ctx = build_context(cli)?;
    match &cli.command {
        Command::Solve => commands::cmd_solve(&ctx),
        Command::Evaluate {
            policy,
            fixed_length,
        } => commands::cmd_evaluate(&ctx, &policy_source(policy, fixed_length)),
        Command::Stability => commands::cmd_stability(&ctx),
        Command::Simulate {
            policy,
            fixed_length,
        } => commands::cmd_simulate(&ctx, &policy_source(policy, fixed_length)),
        Command::Fig2 { n_list } => {
            let list = match n_list {
                Some(text) => Some(report::parse_usize_list(text)?),
                None => None,
            };
            commands::cmd_fig2(&ctx, list)
        }
        Command::Fig3 => commands::cmd_fig3(&ctx),
    }
}

/// Category token for the one-line error report.
fn categorize(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<wncs_core::Error>() {
            return core.category();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "config"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err:#}", categorize(&err));
            ExitCode::FAILURE
        }
    }
}
