//! Sweep orchestration: configuration, seed derivation, parallel trial
//! execution and CSV/SVG output.

pub mod config;
pub mod csv;
pub mod runner;
pub mod seed;
pub mod svg;

pub use config::SweepConfig;
pub use runner::{run_sweep, run_sweep_with, run_trial, RunOptions, SweepResult};
pub use seed::{derive_seed, SeedLabel};
