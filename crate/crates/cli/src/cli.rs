use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ergodic_smpc::io::{read_json, write_json};
use ergodic_smpc::linalg::symmetric_eigenvalues;
use ergodic_smpc::smpc::generate_problem;
use ergodic_smpc::MpcProblem;

use crate::config::{ExperimentConfig, TrialSeeds};
use crate::demo::{run_demo, UnknownDemo, DEFAULT_DEMO_STEPS};
use crate::pipeline::{check_problem, reproduce_paper, simulate_closed_loop, write_run_outputs};

#[derive(Debug, Parser)]
#[command(name = "ergodic-smpc", version, about = "Stochastic MPC as an iterated function system")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Explicit flags override the config
/// file, which overrides the built-in defaults.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Master seed.
    #[arg(long, global = true, env = "ERGODIC_SMPC_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    /// SAA samples J per control computation.
    #[arg(long = "saa-samples", global = true)]
    pub saa_samples: Option<usize>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    pub windows: Option<usize>,
    /// TV tolerance of the stationarity diagnostic.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// One trial, 10³ iterations, J = 20.
    #[arg(long, global = true)]
    pub smoke: bool,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random problem instance and write it as JSON.
    Generate,
    /// Check the sufficient contraction conditions of a problem file.
    Check { problem: PathBuf },
    /// Simulate the SMPC closed loop of a problem file.
    Run { problem: PathBuf },
    /// Run the full multi-trial reproduction.
    ReproducePaper,
    /// Simulate a reference IFS: a built-in name or a description file.
    IfsDemo { name: String },
}

impl CommonArgs {
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.smoke {
            config.apply_smoke();
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.trials {
            config.n_trials = v;
        }
        if let Some(v) = self.iters {
            config.n_iterations = v;
        }
        if let Some(v) = self.saa_samples {
            config.saa_samples = v;
        }
        if let Some(v) = self.bins {
            config.n_bins = v;
        }
        if let Some(v) = self.windows {
            config.n_windows = v;
        }
        if let Some(v) = self.tolerance {
            config.tolerance = v;
        }
        config.validate()?;
        Ok(config)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn load_problem(path: &Path) -> anyhow::Result<MpcProblem> {
    read_json(path).with_context(|| format!("reading problem {}", path.display()))
}

fn spectrum(label: &str, values: Vec<f64>) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("{label} spectrum: [{}]", parts.join(", "))
}

pub fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    let config = cli.common.resolve()?;
    match &cli.command {
        Command::Generate => {
            let out = cli.common.out_or("problem.json");
            let problem = generate_problem(&config.generation, config.seed)?;
            write_json(&out, &problem)?;
            println!("wrote {}", out.display());
            println!("{}", spectrum("A", symmetric_eigenvalues(problem.a())));
            println!("{}", spectrum("Q", symmetric_eigenvalues(problem.q())));
            println!("{}", spectrum("R", symmetric_eigenvalues(problem.r())));
            let noise = problem.noise();
            println!("noise entries {:?} with half-width {}", noise.pattern, noise.bound);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { problem } => {
            let out = cli.common.out_or("conditions.json");
            let problem = load_problem(problem)?;
            let report = check_problem(&problem, TrialSeeds::new(config.seed, 0).check)?;
            write_json(&out, &report)?;
            for r in [&report.linear_sufficient_condition, &report.average_contraction] {
                let constant = r.constant("bound").or(r.constant("lambda_s")).unwrap_or(f64::NAN);
                println!("{}: {} ({:.6} vs threshold {})", r.condition, r.verdict, constant, r.threshold);
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { problem } => {
            let out = cli.common.out_or("run");
            let problem = load_problem(problem)?;
            let seeds = TrialSeeds::new(config.seed, 0);
            let traj = simulate_closed_loop(&problem, &config, seeds.simulation)?;
            let (_, _, diagnostic) = write_run_outputs(&out, &traj, &config, seeds.diagnostic)?;
            println!("{} states, verdict {}", traj.len(), diagnostic.verdict);
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ReproducePaper => {
            let out = cli.common.out_or("reproduction");
            let rep = reproduce_paper(&config, &out, cli.common.workers)?;
            for t in &rep.trials {
                println!(
                    "trial {:3}: conditions {} / {}, diagnostic {}",
                    t.trial,
                    t.conditions.linear_sufficient_condition.verdict,
                    t.conditions.average_contraction.verdict,
                    t.diagnostic.verdict
                );
            }
            for f in &rep.failures {
                eprintln!("trial {:3} failed: {}", f.trial, f.error);
            }
            println!("wrote {}", out.display());
            Ok(if rep.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::IfsDemo { name } => {
            let out = cli.common.out_or("demo");
            let steps = cli.common.iters.unwrap_or(DEFAULT_DEMO_STEPS);
            let (summary, _) = run_demo(name, &config, steps, &out)?;
            if let Some(ks) = summary.ks_to_invariant {
                println!("KS distance to the invariant law: {ks:.5}");
            }
            println!("verdict {}", summary.verdict);
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Entry point: usage errors exit with 2, other errors with 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UnknownDemo>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
