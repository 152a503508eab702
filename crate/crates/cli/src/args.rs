use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aoi_mec::optimize::{Objective, DEFAULT_RESOLUTION};

use crate::sweep::SimSettings;

#[derive(Debug, Parser)]
#[command(name = "aoi-mec", version, about = "Average AoI and peak AoI of a multi-user MEC system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form AoI, PAoI, bounds and PAoI-optimal ratio of one configuration.
    Analytic(AnalyticArgs),
    /// Evaluate a sweep file into a CSV table.
    Sweep(SweepArgs),
    /// Simulate a configuration and test the closed forms against it.
    Validate(ValidateArgs),
    /// Closed-form and numerical offloading-ratio optimization.
    Optimize(OptimizeArgs),
    /// Simulate a configuration and report the estimates.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Write the result as a one-row CSV table.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SimFlags {
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Packets delivered per UE in each replication.
    #[arg(long, value_name = "N")]
    pub packets: Option<u64>,
    /// Leading packets per UE discarded from the estimates.
    #[arg(long, value_name = "N")]
    pub warmup: Option<u64>,
    #[arg(long, value_name = "N")]
    pub reps: Option<usize>,
}

impl SimFlags {
    pub fn settings(&self) -> SimSettings {
        SimSettings {
            seed: self.seed,
            packets: self.packets,
            warmup: self.warmup,
            reps: self.reps,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// CSV destination; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Add simulated estimates to every stable row.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub sim: SimFlags,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Write every comparison as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
    #[arg(long, hide = true, value_name = "TERM")]
    pub corrupt_term: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Aoi,
    Paoi,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Aoi => Objective::Aoi,
            ObjectiveArg::Paoi => Objective::Paoi,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Grid spacing of the numerical search.
    #[arg(long, value_name = "R", default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: f64,
    /// Search one objective only; both by default.
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Write the estimates as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write every retained packet of the first replication.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
}
