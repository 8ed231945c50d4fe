//! Command-line entry point.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on solver
//! failures.

use clap::{Parser, Subcommand};
use polarsense_core::Error;
use polarsense_harness::config::{BaselineKind, ExperimentConfig, ObjectiveKind};
use polarsense_harness::outputs::emit_outputs;
use polarsense_harness::runner::{run_experiment, set_dump_dir};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polarsense",
    version,
    about = "Joint waveform and polarization co-design experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config and write CSV + plots.
    Run {
        /// Path to the experiment config (JSON). Optional when --profile
        /// selects a built-in scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the Monte-Carlo seed count (seeds 0..N-1).
        #[arg(long)]
        seeds: Option<u64>,
        /// Built-in scenario scale: `desk` (4x4 arrays, L=8) or `paper`
        /// (6x6 arrays, L=16).
        #[arg(long)]
        profile: Option<String>,
        /// Comma-separated baseline list
        /// (static,tx_only,rx_only,tx_rx,dual_1x,dual_2x).
        #[arg(long)]
        baselines: Option<String>,
        /// Design objective: `mse` or `sinr`.
        #[arg(long)]
        objective: Option<String>,
        /// Dump every conic subproblem in CBF format under <out>/conic.
        #[arg(long, default_value_t = false)]
        dump_conic: bool,
    },
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, Error> {
    match s {
        "mse" => Ok(ObjectiveKind::Mse),
        "sinr" => Ok(ObjectiveKind::Sinr),
        other => Err(Error::Config(format!("unknown objective '{other}'"))),
    }
}

fn load_config(
    config: &Option<PathBuf>,
    profile: &Option<String>,
    objective: &Option<String>,
) -> Result<ExperimentConfig, Error> {
    let objective_kind = objective.as_deref().map(parse_objective).transpose()?;
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => {
            let kind = objective_kind.unwrap_or(ObjectiveKind::Mse);
            match profile.as_deref() {
                Some("desk") | None => ExperimentConfig::desk(kind),
                Some("paper") => ExperimentConfig::paper(kind),
                Some(other) => return Err(Error::Config(format!("unknown profile '{other}'"))),
            }
        }
    };
    if let Some(kind) = objective_kind {
        cfg.objective = kind;
    }
    if let Some(profile) = profile.as_deref() {
        match profile {
            "desk" => {
                cfg.nt = 4;
                cfg.nr = 4;
                cfg.l = 8;
            }
            "paper" => {
                cfg.nt = 6;
                cfg.nr = 6;
                cfg.l = 16;
            }
            other => return Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
    Ok(cfg)
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seeds, profile, baselines, objective, dump_conic } => {
            let mut cfg = load_config(&config, &profile, &objective)?;
            if let Some(n) = seeds {
                cfg.seeds = (0..n).collect();
            }
            if let Some(list) = baselines {
                cfg.baselines = list
                    .split(',')
                    .map(|s| BaselineKind::parse(s.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
            }
            cfg.validate()?;

            if dump_conic {
                let dir = out.join("conic");
                std::fs::create_dir_all(&dir)
                    .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
                set_dump_dir(Some(dir));
            }

            eprintln!(
                "running '{}': {} baselines x {} sweep points x {} seeds",
                cfg.name,
                cfg.baselines.len(),
                cfg.sweep_grid.len(),
                cfg.seeds.len()
            );
            let rows = run_experiment(&cfg)?;
            let infeasible = rows.iter().filter(|r| !r.feasible).count();
            let written = emit_outputs(&rows, &cfg, &out)?;
            eprintln!(
                "{} rows ({} infeasible); wrote {} files under {}",
                rows.len(),
                infeasible,
                written.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) | Err(e @ Error::Domain(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            ExitCode::from(3)
        }
    }
}
