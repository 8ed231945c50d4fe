//! Experiment orchestration for the waveform/polarization co-design
//! library: scenario configs, the baseline registry, parameter sweeps,
//! Monte-Carlo aggregation, CSV emission and static plot files.

pub mod baselines;
pub mod config;
pub mod csvio;
pub mod outputs;
pub mod runner;
pub mod svgplot;

pub use config::{BaselineKind, ExperimentConfig, ObjectiveKind, SweepAxis};
pub use runner::{run_experiment, ResultRow};
