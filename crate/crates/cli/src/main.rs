//! `gkp`: command-line driver for the grid-state stabilization studies.
//!
//! Every run writes `manifest.json` into the output directory before any
//! computation, bulk data as CSV with JSON sidecars, and exactly one JSON
//! summary line on stdout. Exit codes: 0 success, 2 configuration error,
//! 3 solver failure, 4 insufficient data.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::CommonArgs;

#[derive(Parser, Debug)]
#[command(name = "gkp", version, about = "Dissipative GKP stabilization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stabilize from vacuum and track the fidelity to the target state.
    Stabilize {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::StabilizeOpts,
    },
    /// Logical contrast decay over a loss/regularization grid with a power-law fit.
    NoiseSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::SweepOpts,
    },
    /// Spectral gap of the reduced operator and the weighted Hardy check.
    Spectral {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::SpectralOpts,
    },
    /// Certificate for the linear energy bound.
    CertifyEnergy {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::EnergyOpts,
    },
    /// Qunaught steady states under photon loss.
    Qunaught {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::QunaughtOpts,
    },
    /// Full-model decay of a periodic observable against the reduced model.
    Crosscheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Wigner map of a finite-energy logical state.
    Wigner {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: commands::WignerOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match cli.command {
        Command::Stabilize { common, opts } => ("stabilize", commands::stabilize(common, opts)),
        Command::NoiseSweep { common, opts } => ("noise-sweep", commands::noise_sweep(common, opts)),
        Command::Spectral { common, opts } => ("spectral", commands::spectral(common, opts)),
        Command::CertifyEnergy { common, opts } => ("certify-energy", commands::certify_energy(common, opts)),
        Command::Qunaught { common, opts } => ("qunaught", commands::qunaught(common, opts)),
        Command::Crosscheck { common } => ("crosscheck", commands::crosscheck(common)),
        Command::Wigner { common, opts } => ("wigner", commands::wigner(common, opts)),
    };
    match result {
        Ok(mut summary) => {
            summary["command"] = json!(name);
            summary["status"] = json!("ok");
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("gkp {name}: {}", failure.message);
            println!(
                "{}",
                json!({"command": name, "status": "error", "exit_code": failure.code, "message": failure.message})
            );
            ExitCode::from(failure.code)
        }
    }
}
