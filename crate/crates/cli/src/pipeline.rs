use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ergodic_smpc::conditions::{check_average_contraction, check_linear_sufficient_condition};
use ergodic_smpc::ergodics::{build_histogram, stationarity_diagnostic, windowed_measures};
use ergodic_smpc::ifs::{simulate, DiscreteIfs};
use ergodic_smpc::io::{format_float, write_atomic, write_histogram_dim_csv, write_json, write_trajectory_csv};
use ergodic_smpc::smpc::{closed_loop_map, generate_problem, smpc_closed_loop_ifs};
use ergodic_smpc::{
    BinRange, ConditionReport, DiagnosticReport, DomainBox, EmpiricalMeasure, MpcProblem, StateVector, Trajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, TrialSeeds};

/// Sampling effort of the sampled contraction check.
pub const CONTRACTION_POINTS: usize = 50;
pub const CONTRACTION_PAIRS: usize = 1_000;
/// Half-width of the box on which the sampled check runs.
pub const CONTRACTION_RADIUS: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub linear_sufficient_condition: ConditionReport,
    pub average_contraction: ConditionReport,
}

impl CombinedReport {
    pub fn all_pass(&self) -> bool {
        self.linear_sufficient_condition.verdict.is_pass() && self.average_contraction.verdict.is_pass()
    }
}

/// Analytic norm bound plus the sampled average contraction of the closed
/// loop. The sampled check uses the exact-control loop at each sign extreme
/// of the noise box, weighted equally.
pub fn check_problem(problem: &MpcProblem, seed: u64) -> anyhow::Result<CombinedReport> {
    let linear = check_linear_sufficient_condition(problem)?;
    let d = problem.state_dim();
    let maps = problem
        .noise()
        .extreme_points(d)
        .into_iter()
        .map(|xi| closed_loop_map(problem, xi))
        .collect::<Result<Vec<_>, _>>()?;
    let n = maps.len();
    let ifs = DiscreteIfs::with_constant_probabilities(maps, vec![1.0 / n as f64; n])?;
    let domain = DomainBox::around(&StateVector::zeros(d)?, CONTRACTION_RADIUS)?;
    let mut sampled = check_average_contraction(&ifs, &domain, CONTRACTION_POINTS, CONTRACTION_PAIRS, seed)?;
    sampled
        .notes
        .push("maps are the exact-control closed loop at each sign extreme of the noise box".into());
    Ok(CombinedReport {
        linear_sufficient_condition: linear,
        average_contraction: sampled,
    })
}

/// SMPC closed loop from the origin with `J` SAA samples per step.
pub fn simulate_closed_loop(problem: &MpcProblem, config: &ExperimentConfig, seed: u64) -> anyhow::Result<Trajectory> {
    let ifs = smpc_closed_loop_ifs(problem, config.saa_samples)?;
    let x0 = StateVector::zeros(problem.state_dim())?;
    Ok(simulate(&ifs, &x0, config.n_iterations, seed)?)
}

pub fn histogram_file_name(dim: usize) -> String {
    format!("histogram_x{dim}.csv")
}

/// Files written by [`write_run_outputs`], relative to the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFiles {
    pub trajectory: String,
    pub histograms: Vec<String>,
    pub diagnostic: String,
}

/// Write the trajectory, per-state histograms over the full run and the
/// stationarity diagnostic into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    traj: &Trajectory,
    config: &ExperimentConfig,
    diagnostic_seed: u64,
) -> anyhow::Result<(RunFiles, EmpiricalMeasure, DiagnosticReport)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trajectory_csv(&dir.join("trajectory.csv"), traj)?;
    let hist = build_histogram(traj, config.n_bins, &BinRange::Auto)?;
    let histograms: Vec<String> = (0..traj.dim()).map(histogram_file_name).collect();
    for (dim, name) in histograms.iter().enumerate() {
        write_histogram_dim_csv(&dir.join(name), &hist, dim)?;
    }
    let diagnostic = stationarity_diagnostic(traj, &config.diagnostic_options(diagnostic_seed))?;
    write_json(&dir.join("diagnostic.json"), &diagnostic)?;
    let files = RunFiles {
        trajectory: "trajectory.csv".into(),
        histograms,
        diagnostic: "diagnostic.json".into(),
    };
    Ok((files, hist, diagnostic))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub problem_file: String,
    pub conditions_file: String,
    pub conditions: CombinedReport,
    pub files: RunFiles,
    pub diagnostic: DiagnosticReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct Reproduction {
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
}

impl Reproduction {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn trial_dir_name(trial: usize) -> String {
    format!("trial_{trial:03}")
}

/// generate → check → run for one trial, writing into `out/trial_NNN`.
pub fn run_trial(config: &ExperimentConfig, out: &Path, trial: usize) -> anyhow::Result<TrialResult> {
    let seeds = TrialSeeds::new(config.seed, trial);
    let name = trial_dir_name(trial);
    let dir = out.join(&name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let problem = generate_problem(&config.generation, seeds.problem)?;
    write_json(&dir.join("problem.json"), &problem)?;
    let conditions = check_problem(&problem, seeds.check)?;
    write_json(&dir.join("conditions.json"), &conditions)?;

    let traj = simulate_closed_loop(&problem, config, seeds.simulation)?;
    let (files, _, diagnostic) = write_run_outputs(&dir, &traj, config, seeds.diagnostic)?;
    let prefix = |f: &str| format!("{name}/{f}");
    Ok(TrialResult {
        trial,
        problem_file: prefix("problem.json"),
        conditions_file: prefix("conditions.json"),
        conditions,
        files: RunFiles {
            trajectory: prefix(&files.trajectory),
            histograms: files.histograms.iter().map(|h| prefix(h)).collect(),
            diagnostic: prefix(&files.diagnostic),
        },
        diagnostic,
    })
}

/// Run every trial on a pool of `workers` threads (all cores when `None`)
/// and write the summary table, figure data and failure manifest.
pub fn reproduce_paper(config: &ExperimentConfig, out: &Path, workers: Option<usize>) -> anyhow::Result<Reproduction> {
    config.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().context("building worker pool")?;
    let outcomes: Vec<(usize, anyhow::Result<TrialResult>)> = pool.install(|| {
        (0..config.n_trials)
            .into_par_iter()
            .map(|t| (t, run_trial(config, out, t)))
            .collect()
    });

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (trial, outcome) in outcomes {
        match outcome {
            Ok(r) => trials.push(r),
            Err(e) => failures.push(TrialFailure {
                trial,
                error: format!("{e:#}"),
            }),
        }
    }

    write_json(&out.join("config.json"), config)?;
    write_atomic(&out.join("summary.csv"), summary_csv(config, &trials, &failures).as_bytes())?;
    if let Some(rep) = trials.iter().find(|t| t.trial == 0) {
        write_atomic(&out.join("figure_histogram.csv"), figure_histogram_csv(out, rep)?.as_bytes())?;
        write_atomic(&out.join("figure_windows.csv"), figure_windows_csv(out, config, rep)?.as_bytes())?;
    }
    write_json(&out.join("failures.json"), &failures)?;
    Ok(Reproduction { trials, failures })
}

fn summary_csv(config: &ExperimentConfig, trials: &[TrialResult], failures: &[TrialFailure]) -> String {
    let d = config.generation.state_dim();
    let mut header = vec![
        "trial".to_string(),
        "status".into(),
        "linear_condition".into(),
        "norm_bound".into(),
        "average_contraction".into(),
        "lambda_s".into(),
        "stationarity".into(),
    ];
    header.extend((0..d).map(|j| format!("final_tv_x{j}")));
    let mut rows = vec![header.join(",")];
    for t in 0..config.n_trials {
        let row = if let Some(r) = trials.iter().find(|r| r.trial == t) {
            let c = &r.conditions;
            let num = |v: Option<f64>| v.map(format_float).unwrap_or_default();
            let mut row = vec![
                t.to_string(),
                "ok".into(),
                c.linear_sufficient_condition.verdict.to_string(),
                num(c.linear_sufficient_condition.constant("bound")),
                c.average_contraction.verdict.to_string(),
                num(c.average_contraction.constant("lambda_s")),
                r.diagnostic.verdict.to_string(),
            ];
            row.extend(r.diagnostic.dimensions.iter().map(|dim| format_float(*dim.tv.last().unwrap_or(&f64::NAN))));
            row
        } else {
            debug_assert!(failures.iter().any(|f| f.trial == t));
            let mut row = vec![t.to_string(), "failed".into()];
            row.extend(std::iter::repeat_n(String::new(), 5 + d));
            row
        };
        rows.push(row.join(","));
    }
    rows.push(String::new());
    rows.join("\n")
}

/// Per-state bin proportions of the representative trial over its full run.
fn figure_histogram_csv(out: &Path, rep: &TrialResult) -> anyhow::Result<String> {
    let mut lines = vec!["trial,state,bin,bin_lo,bin_hi,proportion".to_string()];
    for file in &rep.files.histograms {
        for (dim, edges, props) in ergodic_smpc::io::read_histogram_csv(&out.join(file))? {
            for (bin, p) in props.iter().enumerate() {
                lines.push(format!(
                    "{},{dim},{bin},{},{},{}",
                    rep.trial,
                    format_float(edges[bin]),
                    format_float(edges[bin + 1]),
                    format_float(*p)
                ));
            }
        }
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}

/// Per-window bin proportions of the representative trial on the shared
/// full-run layout, the data behind a stabilization plot.
fn figure_windows_csv(out: &Path, config: &ExperimentConfig, rep: &TrialResult) -> anyhow::Result<String> {
    let traj = ergodic_smpc::io::read_trajectory_csv(&out.join(&rep.files.trajectory))?;
    let bounds = &rep.diagnostic.boundaries;
    let windows: Vec<(usize, usize)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    let measures = windowed_measures(&traj, &windows, config.n_bins)?;
    let mut lines = vec!["trial,window,start,end,state,bin,bin_lo,bin_hi,proportion".to_string()];
    for (w, m) in measures.iter().enumerate() {
        for dim in 0..m.dims() {
            for (bin, p) in m.proportions(dim).iter().enumerate() {
                let (lo, hi) = m.bin_bounds(dim, bin);
                lines.push(format!(
                    "{},{w},{},{},{dim},{bin},{},{},{}",
                    rep.trial,
                    windows[w].0,
                    windows[w].1,
                    format_float(lo),
                    format_float(hi),
                    format_float(*p)
                ));
            }
        }
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}

/// Directory listing of every regular file under `root` as relative paths,
/// sorted. Used by determinism checks.
pub fn list_files(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).expect("walk stays under root").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}
