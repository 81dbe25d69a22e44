//! Command-line entry point for the UAV-NOMA energy-efficiency simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uavnoma_cli::{run_experiment, run_snapshot, ExperimentSpec, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "uavnoma",
    about = "Energy-efficiency experiments for UAV-aided NOMA uplink IoT networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every cell of an experiment spec and write the CSV outputs.
    Run {
        /// Experiment spec (TOML).
        spec: PathBuf,
        /// Where to write results (overrides the spec).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads for the cell pool (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate an experiment spec, reporting every problem.
    Validate {
        /// Experiment spec (TOML).
        spec: PathBuf,
    },
    /// Run one scenario and export its layout/assignment snapshot.
    Snapshot {
        /// Scenario config (TOML).
        config: PathBuf,
        /// Where to write the snapshot files.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the layout seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { spec, output_dir, workers, seed } => {
            ExperimentSpec::from_file(&spec).and_then(|spec| {
                let output = run_experiment(&spec, &RunOptions { output_dir, workers, seed })?;
                println!(
                    "ran {} cells in {:.2} s; wrote {} files to {}",
                    output.cells,
                    output.elapsed_s,
                    output.files.len(),
                    output.output_dir.display()
                );
                Ok(())
            })
        }
        Command::Validate { spec } => ExperimentSpec::from_file(&spec).map(|spec| {
            println!(
                "ok: {} variants x {} seeds{} -> {} cells",
                spec.variants.len(),
                spec.num_seeds,
                spec.sweep
                    .as_ref()
                    .map(|s| format!(" x {} {} values", s.values.len(), s.axis))
                    .unwrap_or_default(),
                spec.num_cells()
            );
        }),
        Command::Snapshot { config, output_dir, seed } => {
            run_snapshot(&config, &RunOptions { output_dir, workers: None, seed }).map(|output| {
                println!(
                    "snapshot written to {} ({} files, {:.2} s)",
                    output.output_dir.display(),
                    output.files.len(),
                    output.elapsed_s
                );
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
