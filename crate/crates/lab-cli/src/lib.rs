//! Orchestration for the Carnot-group diffusion laboratory: scenario
//! configuration, validation, deterministic seeded runs, and artifact
//! emission (manifest, reports, plot CSVs).

pub mod artifacts;
pub mod config;
pub mod manifest;
pub mod runner;
pub mod scenarios;

pub use config::{validate, ExperimentConfig, ExperimentKind};
pub use runner::{run, RunOutcome};
