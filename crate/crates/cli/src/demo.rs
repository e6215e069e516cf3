use std::path::Path;

use anyhow::{bail, Context};
use ergodic_smpc::ergodics::ks_distance_to_cdf;
use ergodic_smpc::ifs::{bernoulli_ifs, simulate, DiscreteIfs, IfsMap};
use ergodic_smpc::io::{read_json, write_json};
use ergodic_smpc::{DiagnosticReport, StateVector, StationarityVerdict};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::pipeline::{write_run_outputs, RunFiles};

pub const DEMOS: &[&str] = &["bernoulli"];
pub const DEFAULT_DEMO_STEPS: usize = 100_000;
/// Steps dropped before comparing against an analytic invariant law.
pub const DEMO_BURN_IN: usize = 100;

/// Affine map `x ↦ Mx + c` in a demo description file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMapSpec {
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// An IFS of affine maps with constant weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsDescription {
    pub maps: Vec<AffineMapSpec>,
    pub probabilities: Vec<f64>,
    pub initial_state: Vec<f64>,
}

impl IfsDescription {
    pub fn build(&self) -> anyhow::Result<(DiscreteIfs, StateVector)> {
        let x0 = StateVector::new(self.initial_state.clone())?;
        let d = x0.dim();
        let mut maps = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            if m.matrix.len() != d || m.matrix.iter().any(|r| r.len() != d) || m.offset.len() != d {
                bail!("map {i} does not match the {d}-dimensional initial state");
            }
            let matrix = DMatrix::from_row_iterator(d, d, m.matrix.iter().flatten().copied());
            maps.push(IfsMap::affine(matrix, DVector::from_column_slice(&m.offset)));
        }
        let ifs = DiscreteIfs::with_constant_probabilities(maps, self.probabilities.clone())?;
        Ok((ifs, x0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub name: String,
    pub n_steps: usize,
    pub seed: u64,
    /// KS distance of the post-burn-in states to the known invariant law.
    pub ks_to_invariant: Option<f64>,
    pub verdict: StationarityVerdict,
    pub files: RunFiles,
}

#[derive(Debug)]
pub struct UnknownDemo(pub String);

impl std::fmt::Display for UnknownDemo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "unknown demo '{}'; available demos: {} (or the path of an IFS description file)",
            self.0,
            DEMOS.join(", ")
        )
    }
}

impl std::error::Error for UnknownDemo {}

pub fn run_demo(
    name: &str,
    config: &ExperimentConfig,
    n_steps: usize,
    out: &Path,
) -> anyhow::Result<(DemoSummary, DiagnosticReport)> {
    let (ifs, x0, uniform_law) = match name {
        "bernoulli" => (bernoulli_ifs(), StateVector::scalar(0.0)?, true),
        other if Path::new(other).is_file() => {
            let desc: IfsDescription =
                read_json(Path::new(other)).with_context(|| format!("reading IFS description {other}"))?;
            let (ifs, x0) = desc.build()?;
            (ifs, x0, false)
        }
        other => return Err(UnknownDemo(other.to_string()).into()),
    };
    let traj = simulate(&ifs, &x0, n_steps, config.seed)?;
    let (files, _, diagnostic) = write_run_outputs(out, &traj, config, config.seed)?;
    let ks_to_invariant = if uniform_law && traj.len() > DEMO_BURN_IN {
        let xs = traj.coordinate(0, DEMO_BURN_IN..traj.len());
        Some(ks_distance_to_cdf(&xs, |x| x.clamp(0.0, 1.0))?)
    } else {
        None
    };
    let label = if Path::new(name).is_file() {
        Path::new(name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    } else {
        name.to_string()
    };
    let summary = DemoSummary {
        name: label,
        n_steps,
        seed: config.seed,
        ks_to_invariant,
        verdict: diagnostic.verdict,
        files,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok((summary, diagnostic))
}
