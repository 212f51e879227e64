// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlyap_cli::{run_experiment, Experiment};

/// Lyapunov feedback gate-preparation experiments.
#[derive(Parser)]
#[command(name = "qlyap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single closed-loop run: trajectory.csv and summary.toml.
    Run(Common),
    /// Several laws on one model: per-law trajectories, comparison.csv, ranking.csv.
    Compare(Common),
    /// Uncontrolled purity decay per model kind: purity.csv.
    FreeEvolution(Common),
    /// Constant-offset sweeps: robustness.csv and a per-axis ranking.
    Robustness(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: $QLYAP_OUT_DIR, then the config's output.dir].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Run(a) => (Experiment::Run, a),
        Command::Compare(a) => (Experiment::Compare, a),
        Command::FreeEvolution(a) => (Experiment::FreeEvolution, a),
        Command::Robustness(a) => (Experiment::Robustness, a),
    };
    match run_experiment(experiment, &args.config, args.out.as_deref()) {
        Ok(report) => {
            print!("{}", report.text);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
