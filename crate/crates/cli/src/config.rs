use std::path::Path;

use anyhow::{bail, Context};
use ergodic_smpc::rng::derive_seed;
use ergodic_smpc::{DiagnosticOptions, GenerationSpec};
use serde::{Deserialize, Serialize};

/// Parameters of a reproduction run. Missing fields in a config file take
/// the defaults below, which follow the published experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_trials: usize,
    pub n_iterations: usize,
    pub saa_samples: usize,
    pub n_bins: usize,
    pub n_windows: usize,
    pub tolerance: f64,
    pub burn_in_fraction: f64,
    pub seed: u64,
    pub generation: GenerationSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_trials: 20,
            n_iterations: 10_000,
            saa_samples: 100,
            n_bins: 10,
            n_windows: 4,
            tolerance: 0.05,
            burn_in_fraction: 0.1,
            seed: 0,
            generation: GenerationSpec::default(),
        }
    }
}

impl ExperimentConfig {
    /// Small preset for CI: one trial, 10³ iterations, `J = 20`.
    pub fn apply_smoke(&mut self) {
        self.n_trials = 1;
        self.n_iterations = 1_000;
        self.saa_samples = 20;
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let config: Self =
            ergodic_smpc::io::read_json(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let counts = [
            ("n_trials", self.n_trials),
            ("n_iterations", self.n_iterations),
            ("saa_samples", self.saa_samples),
            ("n_bins", self.n_bins),
        ];
        for (name, v) in counts {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.n_windows < 2 {
            bail!("n_windows must be at least 2");
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1.0) {
            bail!("tolerance must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            bail!("burn_in_fraction must lie in [0, 1)");
        }
        let post = self.n_iterations + 1;
        if post < 10 * self.n_windows {
            bail!("{} iterations are too few for {} windows", self.n_iterations, self.n_windows);
        }
        self.generation.validate()?;
        Ok(())
    }

    pub fn diagnostic_options(&self, seed: u64) -> DiagnosticOptions {
        DiagnosticOptions {
            n_windows: self.n_windows,
            n_bins: self.n_bins,
            tolerance: self.tolerance,
            burn_in_fraction: self.burn_in_fraction,
            seed,
        }
    }
}

/// Seeds of one trial, all derived from the master seed and the trial id
/// so that trials are independent of scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub problem: u64,
    pub simulation: u64,
    pub check: u64,
    pub diagnostic: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, trial: usize) -> Self {
        let t = trial as u64;
        Self {
            problem: derive_seed(master, 1, t),
            simulation: derive_seed(master, 2, t),
            check: derive_seed(master, 3, t),
            diagnostic: derive_seed(master, 4, t),
        }
    }
}
