use std::path::PathBuf;
use std::process::ExitCode;

use blackstock_cli::config::SEED_ENV;
use blackstock_cli::{execute, load_config, Command, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "blackstock",
    version,
    about = "Spectral simulator and diagnostics for the damped Blackstock equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate one run and write series.csv, summary.json and checkpoint.bin.
    Simulate(Common),
    /// Fit the exponential decay rate of a run.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Existing series.csv to fit instead of simulating.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Bisect the amplitude separating decay from blow-up.
    Threshold(Common),
    /// Compare weighted and unweighted regularity across resolutions.
    WeightedStudy(Common),
    /// Run the inequality and Gronwall checks.
    VerifyInequalities(Common),
    /// Run the Cartesian product of the sweep lists.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, series) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c, None),
        Sub::Fit { common, series } => (Command::Fit, common, series),
        Sub::Threshold(c) => (Command::Threshold, c, None),
        Sub::WeightedStudy(c) => (Command::WeightedStudy, c, None),
        Sub::VerifyInequalities(c) => (Command::VerifyInequalities, c, None),
        Sub::Sweep(c) => (Command::Sweep, c, None),
    };
    let result = load_config(&common.config).and_then(|mut cfg| {
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        let opts = RunOptions {
            output: common.output,
            jobs: common.jobs,
            series,
        };
        execute(command, &cfg, &opts)
    });
    match result {
        Ok(outcome) => {
            if outcome.exit_code == 0 {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
