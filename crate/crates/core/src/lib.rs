//! Stochastic model predictive control viewed as an iterated function system.
//!
//! * [`ifs`]: discrete and continuously indexed IFS, trajectories and particle ensembles.
//! * [`conditions`]: numerical checks of the contraction, minimum-probability,
//!   Dini and stopping-time conditions that imply ergodicity.
//! * [`smpc`]: the linear-quadratic SMPC instance, exact and SAA controllers,
//!   the mixed-strategy controller and their IFS adapters.
//! * [`ergodics`]: histograms, distribution distances and stationarity diagnostics.
//! * [`io`]: CSV and JSON file formats.

pub mod conditions;
pub mod ergodics;
pub mod error;
pub mod ifs;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod smpc;

pub use conditions::{ConditionReport, DomainBox, Verdict};
pub use ergodics::{BinRange, DiagnosticOptions, DiagnosticReport, EmpiricalMeasure, StationarityVerdict};
pub use error::{Error, Result};
pub use ifs::{ContinuousIfs, DiscreteIfs, IfsMap, IteratedSystem, StateVector, Trajectory};
pub use rng::RandomSource;
pub use smpc::{DiscreteControlProblem, GenerationSpec, MpcProblem, NoiseSpec, SimplexPoint};
