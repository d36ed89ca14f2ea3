//! `orthant`: experiments on the orthant and half-orthant random environments.
//!
//! Exit status: 0 on success, 1 when a statistical check or reliability cap
//! fails (or a hard verification suite fails), 2 on usage or configuration
//! errors. Nothing is written when the configuration is invalid.

mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunConfig, Settings};
use run::Status;

#[derive(Parser, Debug)]
#[command(name = "orthant", version, about = "Passage times and limit shapes of orthant random environments")]
struct Cli {
    /// Flat TOML file of settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Estimate gamma(u) for each given direction (JSON lines).
    EstimateGamma,
    /// Estimate the shape of the limit cone on a direction grid (CSV, SVG).
    Shape,
    /// Run verification suites (JSON lines of reports).
    Verify,
    /// Exploratory diagnostics over a grid of p (CSV).
    Scan,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::EstimateGamma => Command::EstimateGamma,
        Cmd::Shape => Command::Shape,
        Cmd::Verify => Command::Verify,
        Cmd::Scan => Command::Scan,
    };
    let cfg = cli
        .config
        .as_deref()
        .map(Settings::load)
        .transpose()
        .map(|file| file.unwrap_or_default().overlay(cli.settings))
        .and_then(|s| RunConfig::resolve(command, s));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match command {
        Command::EstimateGamma => run::estimate_gamma(&cfg),
        Command::Shape => run::shape(&cfg),
        Command::Verify => run::verify(&cfg),
        Command::Scan => run::scan(&cfg),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Soft) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
