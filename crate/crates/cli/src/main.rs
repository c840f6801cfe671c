//! `txh`: sweeps, spectra and fits of the T centre TX model.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::args::{
    FitArgs, OrientationsArgs, RbrArgs, StarkArgs, StrainArgs, SynthArgs, ZeemanArgs,
};

#[derive(Parser)]
#[command(
    name = "txh",
    version,
    about = "Silicon T centre TX-state Hamiltonian tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the 24 orientational subsets.
    Orientations(OrientationsArgs),
    /// Optical lines while rotating a fixed-magnitude magnetic field.
    Zeeman(ZeemanArgs),
    /// Stark shifts along a field direction.
    Stark(StarkArgs),
    /// TX0/TX1 levels under uniaxial or hydrostatic stress.
    Strain(StrainArgs),
    /// Radiative branching ratio over field directions.
    Rbr(RbrArgs),
    /// Fit model parameters to spectral data.
    Fit(FitArgs),
    /// Write a synthetic dataset from the model.
    Synth(SynthArgs),
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<txh::Error>() {
        return e.kind();
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        "Io"
    } else if err.downcast_ref::<csv::Error>().is_some() {
        "Csv"
    } else if err.downcast_ref::<serde_json::Error>().is_some() {
        "Json"
    } else {
        "Usage"
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("TXH_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("TXH_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Orientations(a) => commands::run_orientations(a),
        Command::Zeeman(a) => commands::run_zeeman(a),
        Command::Stark(a) => commands::run_stark(a),
        Command::Strain(a) => commands::run_strain(a),
        Command::Rbr(a) => commands::run_rbr(a),
        Command::Fit(a) => commands::run_fit(a),
        Command::Synth(a) => commands::run_synth(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::json!({
                "error": error_kind(&err),
                "message": format!("{err:#}"),
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
