//! Command-line front end for the `redundancy-core` experiments.
//!
//! Every table-producing command writes `<name>.csv`, a matching `<name>.svg`
//! chart and a `manifest.txt` into the output directory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use redundancy_core::codec::Scheme;

pub mod chart;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod table;

pub use config::{ConfigArgs, ExperimentConfig};
pub use error::{CliError, Result};
pub use table::{Column, ComparisonTable};

#[derive(Debug, Parser)]
#[command(name = "redundancy", version, about = "Replication versus MDS coding for batches of jobs")]
pub struct Cli {
    /// Log filter, e.g. `warn`, `info` or `redundancy_core=debug`.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form replication tails on a time grid.
    Analytic {
        #[command(flatten)]
        config: ConfigArgs,
        /// Explicit comma-separated times instead of `0..=t_max` by `step`.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Solve the mean-field equation for each `m`.
    Meanfield {
        #[command(flatten)]
        config: ConfigArgs,
        /// Continue when the coded arrival rate per queue is at least one.
        #[arg(long)]
        allow_overload: bool,
    },
    /// Run every (policy, seed) cell and compare with theory.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed or comma-separated seeds, one cell per seed.
        #[arg(long, required = true)]
        seed: String,
    },
    /// Report how simulated ECDFs in a table agree with theory columns.
    Compare {
        /// A CSV written by `simulate` or `fig1 --simulate`.
        table: PathBuf,
        /// Also render the table as an SVG chart to this path.
        #[arg(long)]
        chart: Option<PathBuf>,
    },
    /// Replication d=3 against MDS m=2..6 for batches of three jobs.
    Fig1 {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overlay simulated ECDFs with confidence bands.
        #[arg(long)]
        simulate: bool,
        /// Seeds for the overlay.
        #[arg(long)]
        seed: Option<String>,
        /// Values of m to simulate for the overlay.
        #[arg(long, default_value = "3")]
        sim_m: String,
    },
    /// Encode a message, erase coded jobs, and decode it again.
    CodecDemo(CodecArgs),
    /// Run the built-in consistency checks.
    Selftest {
        /// Use the full simulation sizes instead of the quick ones.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CodecArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// `gf256` or `gf65536`.
    #[arg(long, default_value = "gf256")]
    pub field: String,
    #[arg(long, default_value = "systematic-vandermonde")]
    pub scheme: Scheme,
    /// Comma-separated coded-job indices to drop; defaults to `m` random ones.
    #[arg(long)]
    pub erase: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "the quick brown fox jumps over the lazy dog")]
    pub message: String,
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analytic { config, grid } => commands::analytic(config, grid.as_deref()),
        Command::Meanfield { config, allow_overload } => commands::meanfield(config, *allow_overload),
        Command::Simulate { config, seed } => commands::simulate(config, seed),
        Command::Compare { table, chart } => commands::compare(table, chart.as_deref()),
        Command::Fig1 {
            config,
            simulate,
            seed,
            sim_m,
        } => commands::fig1(config, *simulate, seed.as_deref(), sim_m),
        Command::CodecDemo(args) => commands::codec_demo(args),
        Command::Selftest { full } => commands::selftest(*full),
    }
}
