use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector {probs:?}: {reason}")]
    InvalidProbability { probs: Vec<f64>, reason: String },

    #[error("numerical blowup: state norm {norm:e} exceeds bound {bound:e}")]
    NumericalBlowup { norm: f64, bound: f64 },

    #[error("particle {particle} diverged")]
    ParticleDiverged {
        particle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} failed")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sampled parameter lies outside the parameter domain: {0}")]
    ParameterDomain(String),

    #[error("map evaluation produced a non-finite value at {point:?}")]
    Evaluation { point: Vec<f64> },

    #[error("density is negative ({value:e}) at t = {t}, x = {point:?}")]
    InvalidDensity { t: f64, point: Vec<f64>, value: f64 },

    #[error("system has no explicit density; a sampler-only system cannot be checked")]
    MissingDensity,

    #[error("normal matrix R + BᵀQB is singular or ill-conditioned (condition number {condition:e})")]
    SingularNormalMatrix { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("measures are not defined on identical bin edges")]
    IncompatibleMeasures,

    #[error("window [{start}, {end}) is empty or out of bounds")]
    EmptyWindow { start: usize, end: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
