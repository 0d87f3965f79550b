//! `accesswalk`: outward accessibility runs, exact oracle dumps, what-if
//! scenarios and the HTTP service.
//!
//! Exit codes: 0 success, 1 invalid input, 2 internal failure, 3 exact
//! enumeration budget exceeded.

mod commands;
mod manifest;

use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use accesswalk_core::oracle::DEFAULT_BUDGET;
use accesswalk_core::{AccessibilityOptions, ExtinctStepRule};

#[derive(Parser)]
#[command(
    name = "accesswalk",
    version,
    about = "Self-avoiding-walk outward accessibility of street networks"
)]
pub struct Cli {
    /// Suppress progress output and informational logging.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Estimate outward accessibility of every node by Monte Carlo walks.
    Compute(ComputeArgs),
    /// Enumerate every self-avoiding walk exactly (small networks only).
    Oracle(OracleArgs),
    /// Compare regional accessibility before and after adding edges.
    Scenario(ScenarioArgs),
    /// Serve the HTTP API for one network.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct NetworkArgs {
    /// Node CSV with header `id[,x,y]`.
    #[arg(long, requires = "edges", conflicts_with = "network")]
    pub nodes: Option<PathBuf>,
    /// Edge CSV with header `source,target`.
    #[arg(long, requires = "nodes", conflicts_with = "network")]
    pub edges: Option<PathBuf>,
    /// Network JSON `{"nodes": [...], "edges": [[u, v], ...]}`.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WalkArgs {
    /// Maximum walk length S.
    #[arg(long, default_value_t = accesswalk_core::walk::DEFAULT_MAX_STEPS)]
    pub steps: usize,
    /// Walks per source node M.
    #[arg(long, default_value_t = accesswalk_core::walk::DEFAULT_WALKS_PER_SOURCE)]
    pub walks: u32,
    /// Master seed; required so every run is reproducible.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ThreadArgs {
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long, env = "ACCESSWALK_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

impl ThreadArgs {
    pub fn count(&self) -> usize {
        match self.threads {
            Some(t) => t as usize,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct AccessArgs {
    /// Score steps where every walk has ended as exp(0)/(N-1) instead of 0.
    #[arg(long = "literal-eq2")]
    pub literal: bool,
    /// Inclusive step range `A-B` averaged into mean_oa (default: all steps).
    #[arg(long, value_parser = parse_step_range)]
    pub mean_steps: Option<RangeInclusive<usize>>,
}

impl AccessArgs {
    pub fn options(&self) -> AccessibilityOptions {
        AccessibilityOptions {
            extinct_rule: if self.literal {
                ExtinctStepRule::Literal
            } else {
                ExtinctStepRule::Zero
            },
            mean_steps: self.mean_steps.clone(),
        }
    }
}

fn parse_step_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once('-').ok_or("expected START-END")?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a == 0 || a > b {
        return Err(format!("range {a}-{b} must satisfy 1 <= START <= END"));
    }
    Ok(a..=b)
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[command(flatten)]
    pub access: AccessArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write accessibility.geojson (needs node coordinates).
    #[arg(long)]
    pub geojson: bool,
    /// Also write every estimated P_h(i, j) to transitions.csv.gz.
    #[arg(long)]
    pub dump_transitions: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value_t = accesswalk_core::walk::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    /// Partial paths expanded per source before giving up.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub access: AccessArgs,
    #[command(flatten)]
    pub threads: ThreadArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[command(flatten)]
    pub access: AccessArgs,
    /// Scenario JSON `{"add_edges": [[u, v], ...], "radius": r}`.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Region radius in edges; overrides the file (default 7).
    #[arg(long)]
    pub radius: Option<usize>,
    /// Recompute the enhanced network everywhere, not only in the region.
    #[arg(long)]
    pub full_recompute: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[command(flatten)]
    pub access: AccessArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Compute the baseline field before running any scenario job.
    #[arg(long)]
    pub precompute: bool,
}

/// Error caused by the caller: bad flags, files or scenarios.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

/// Failure while producing outputs.
#[derive(Debug)]
pub struct Internal(pub String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Internal {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvalidInput>() {
            return 1;
        }
        if cause.is::<Internal>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<accesswalk_core::Error>() {
            return match e {
                accesswalk_core::Error::BudgetExceeded { .. } => 3,
                e if e.is_input_error() => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "warn"
    } else {
        "info"
    }))
    .format_timestamp(None)
    .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
