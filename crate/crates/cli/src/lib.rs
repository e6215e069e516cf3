//! Experiment runner for `ergodic-smpc`: problem generation, condition
//! checks, closed-loop runs, the multi-trial reproduction and IFS demos.

pub mod cli;
pub mod config;
pub mod demo;
pub mod pipeline;

pub use config::{ExperimentConfig, TrialSeeds};
pub use pipeline::{reproduce_paper, CombinedReport, Reproduction, TrialFailure, TrialResult};
