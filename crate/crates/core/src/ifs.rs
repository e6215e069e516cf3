//! Iterated function systems with state-dependent selection probabilities.
//!
//! A [`DiscreteIfs`] holds a finite family of maps `S_i` and a probability
//! map `x -> (p_1(x), ..., p_N(x))`; one step draws `i` from the categorical
//! distribution at the current state and applies `S_i`. A [`ContinuousIfs`]
//! replaces the index with a parameter `t` drawn from a state-dependent
//! sampler and applies the deterministic map `S(t, x)`.
//!
//! Maps receive the step's [`RandomSource`] so that noisy plants (a map that
//! is itself random, as in a controlled system with additive disturbance) fit
//! the same interface. Deterministic maps ignore it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ergodics::{BinRange, EmpiricalMeasure};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Default divergence guard on `‖x‖`.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

/// Tolerance on `|Σp − 1|` below which a probability vector is renormalized.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// A finite point of ℝᵈ, `d ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("state vector must have dimension ≥ 1"));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Evaluation {
                point: v.iter().copied().collect(),
            });
        }
        Ok(Self(v))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::from_vector(DVector::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

type MapFn = dyn Fn(&StateVector, &mut RandomSource) -> DVector<f64> + Send + Sync;
type ProbFn = dyn Fn(&StateVector) -> Vec<f64> + Send + Sync;

/// One transformation of an IFS.
#[derive(Clone)]
pub struct IfsMap {
    f: Arc<MapFn>,
    random: bool,
}

impl IfsMap {
    pub fn deterministic(f: impl Fn(&StateVector) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(move |x, _| f(x)),
            random: false,
        }
    }

    /// A map that draws its own noise from the step's random source.
    pub fn random(
        f: impl Fn(&StateVector, &mut RandomSource) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            random: true,
        }
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::deterministic(move |x| DVector::from_element(1, f(x[0])))
    }

    /// `x ↦ Mx + c`.
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Self {
        Self::deterministic(move |x| &matrix * x.vector() + &offset)
    }

    pub fn is_random(&self) -> bool {
        self.random
    }

    pub fn apply(&self, x: &StateVector, rng: &mut RandomSource) -> DVector<f64> {
        (self.f)(x, rng)
    }
}

impl fmt::Debug for IfsMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IfsMap").field("random", &self.random).finish()
    }
}

/// Validate a map output against the divergence guard.
pub(crate) fn checked_state(v: DVector<f64>, bound: f64) -> Result<StateVector> {
    let norm = v.norm();
    if !norm.is_finite() || norm > bound {
        return Err(Error::NumericalBlowup { norm, bound });
    }
    StateVector::from_vector(v)
}

/// Check and (within [`PROBABILITY_TOLERANCE`]) renormalize a probability vector.
pub fn normalize_probabilities(mut p: Vec<f64>) -> Result<Vec<f64>> {
    let bad = |p: &[f64], reason: &str| Error::InvalidProbability {
        probs: p.to_vec(),
        reason: reason.to_string(),
    };
    if p.is_empty() {
        return Err(bad(&p, "empty"));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad(&p, "entries must be finite and non-negative"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(bad(&p, &format!("sums to {sum}")));
    }
    if sum != 1.0 {
        p.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(p)
}

/// Inverse-CDF categorical draw; the first index whose cumulative mass
/// exceeds `u` wins, so ties resolve toward the lower index.
pub fn sample_categorical(p: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        cum += pi;
        if u < cum {
            return i;
        }
    }
    // Rounding left the total a hair under u; take the last supported index.
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// Finite-index state-dependent IFS `(S, p)`.
#[derive(Clone)]
pub struct DiscreteIfs {
    maps: Vec<IfsMap>,
    probs: Arc<ProbFn>,
}

impl DiscreteIfs {
    pub fn new(
        maps: Vec<IfsMap>,
        probs: impl Fn(&StateVector) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("an IFS needs at least one map"));
        }
        Ok(Self {
            maps,
            probs: Arc::new(probs),
        })
    }

    /// IFS whose probabilities do not depend on the state.
    pub fn with_constant_probabilities(maps: Vec<IfsMap>, p: Vec<f64>) -> Result<Self> {
        if p.len() != maps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} maps",
                p.len(),
                maps.len()
            )));
        }
        let p = normalize_probabilities(p)?;
        Self::new(maps, move |_| p.clone())
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[IfsMap] {
        &self.maps
    }

    /// Validated `p(x)`.
    pub fn probabilities(&self, x: &StateVector) -> Result<Vec<f64>> {
        let p = (self.probs)(x);
        if p.len() != self.maps.len() {
            return Err(Error::InvalidProbability {
                probs: p,
                reason: format!("expected {} entries", self.maps.len()),
            });
        }
        normalize_probabilities(p)
    }

    pub fn step_discrete(&self, x: &StateVector, rng: &mut RandomSource) -> Result<(StateVector, usize)> {
        self.step_bounded(x, rng, f64::INFINITY)
    }

    fn step_bounded(&self, x: &StateVector, rng: &mut RandomSource, bound: f64) -> Result<(StateVector, usize)> {
        let p = self.probabilities(x)?;
        let i = sample_categorical(&p, rng.uniform());
        let next = checked_state(self.maps[i].apply(x, rng), bound)?;
        Ok((next, i))
    }
}

impl fmt::Debug for DiscreteIfs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteIfs").field("maps", &self.maps.len()).finish()
    }
}

type ParamMapFn<P> = dyn Fn(&P, &StateVector) -> DVector<f64> + Send + Sync;
type SamplerFn<P> = dyn Fn(&StateVector, &mut RandomSource) -> P + Send + Sync;
type DomainFn<P> = dyn Fn(&P) -> bool + Send + Sync;
type DensityFn<P> = dyn Fn(&P, &StateVector) -> f64 + Send + Sync;

/// Continuously indexed IFS: `t ~ p(·, x)`, next state `S(t, x)`.
pub struct ContinuousIfs<P> {
    map: Arc<ParamMapFn<P>>,
    sampler: Arc<SamplerFn<P>>,
    domain: Arc<DomainFn<P>>,
    density: Option<Arc<DensityFn<P>>>,
}

impl<P> Clone for ContinuousIfs<P> {
    fn clone(&self) -> Self {
        Self {
            map: self.map.clone(),
            sampler: self.sampler.clone(),
            domain: self.domain.clone(),
            density: self.density.clone(),
        }
    }
}

impl<P: fmt::Debug> ContinuousIfs<P> {
    pub fn new(
        map: impl Fn(&P, &StateVector) -> DVector<f64> + Send + Sync + 'static,
        sampler: impl Fn(&StateVector, &mut RandomSource) -> P + Send + Sync + 'static,
    ) -> Self {
        Self {
            map: Arc::new(map),
            sampler: Arc::new(sampler),
            domain: Arc::new(|_| true),
            density: None,
        }
    }

    /// Membership test for the parameter space; sampled parameters outside it are errors.
    pub fn with_domain(mut self, domain: impl Fn(&P) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(domain);
        self
    }

    /// Attach the explicit density `p(t, x)` of the sampler.
    pub fn with_density(mut self, density: impl Fn(&P, &StateVector) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn density(&self, t: &P, x: &StateVector) -> Result<f64> {
        self.density.as_ref().map(|d| d(t, x)).ok_or(Error::MissingDensity)
    }

    pub fn apply(&self, t: &P, x: &StateVector) -> DVector<f64> {
        (self.map)(t, x)
    }

    pub fn step_continuous(&self, x: &StateVector, rng: &mut RandomSource) -> Result<(StateVector, P)> {
        self.step_bounded(x, rng, f64::INFINITY)
    }

    fn step_bounded(&self, x: &StateVector, rng: &mut RandomSource, bound: f64) -> Result<(StateVector, P)> {
        let t = (self.sampler)(x, rng);
        if !(self.domain)(&t) {
            return Err(Error::ParameterDomain(format!("{t:?}")));
        }
        let next = checked_state((self.map)(&t, x), bound)?;
        Ok((next, t))
    }
}

impl ContinuousIfs<f64> {
    /// Midpoint-rule check that `∫ p(t, x) dt = 1` over `[lo, hi]` at each
    /// given state, within `1e-6`.
    pub fn verify_density_normalization(&self, states: &[StateVector], lo: f64, hi: f64) -> Result<()> {
        const CELLS: usize = 200_000;
        let h = (hi - lo) / CELLS as f64;
        for x in states {
            let mut total = 0.0;
            for k in 0..CELLS {
                total += self.density(&(lo + (k as f64 + 0.5) * h), x)?;
            }
            total *= h;
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "density integrates to {total} at {:?}",
                    x.as_slice()
                )));
            }
        }
        Ok(())
    }
}

/// Anything that can be iterated one step at a time from a state.
pub trait IteratedSystem: Send + Sync {
    /// Advance one step; the second component is the chosen map index, if any.
    fn advance(&self, x: &StateVector, rng: &mut RandomSource, bound: f64) -> Result<(StateVector, Option<usize>)>;
}

impl IteratedSystem for DiscreteIfs {
    fn advance(&self, x: &StateVector, rng: &mut RandomSource, bound: f64) -> Result<(StateVector, Option<usize>)> {
        self.step_bounded(x, rng, bound).map(|(s, i)| (s, Some(i)))
    }
}

impl<P: fmt::Debug + Send + Sync> IteratedSystem for ContinuousIfs<P> {
    fn advance(&self, x: &StateVector, rng: &mut RandomSource, bound: f64) -> Result<(StateVector, Option<usize>)> {
        self.step_bounded(x, rng, bound).map(|(s, _)| (s, None))
    }
}

/// A simulated orbit `x_0, x_1, ..., x_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub seed: u64,
    /// Map index chosen at each step; `None` for continuously indexed systems.
    pub selections: Option<Vec<usize>>,
}

impl Trajectory {
    pub fn from_states(states: Vec<StateVector>, seed: u64) -> Result<Self> {
        let d = states.first().map(StateVector::dim).ok_or_else(|| Error::invalid("empty trajectory"))?;
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("trajectory states differ in dimension".into()));
        }
        Ok(Self {
            states,
            seed,
            selections: None,
        })
    }

    /// Number of states (steps + 1).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, StateVector::dim)
    }

    /// Coordinate `dim` of every state in `range`.
    pub fn coordinate(&self, dim: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        self.states[range].iter().map(|s| s[dim]).collect()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectories are non-empty")
    }
}

/// Iterate `ifs` from `x0` for `n_steps` using stream 0 of `seed`.
pub fn simulate<S: IteratedSystem + ?Sized>(ifs: &S, x0: &StateVector, n_steps: usize, seed: u64) -> Result<Trajectory> {
    simulate_bounded(ifs, x0, n_steps, seed, DEFAULT_DIVERGENCE_BOUND)
}

/// [`simulate`] with an explicit divergence bound. Errors carry the index
/// `k` of the failing step (the one that would produce `x_{k+1}`).
pub fn simulate_bounded<S: IteratedSystem + ?Sized>(
    ifs: &S,
    x0: &StateVector,
    n_steps: usize,
    seed: u64,
    bound: f64,
) -> Result<Trajectory> {
    let mut rng = RandomSource::new(seed, 0);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut selections = Vec::with_capacity(n_steps);
    let mut all_indexed = true;
    states.push(x0.clone());
    for k in 0..n_steps {
        let (next, choice) = ifs
            .advance(&states[k], &mut rng, bound)
            .map_err(|e| e.at_step(k))?;
        match choice {
            Some(i) => selections.push(i),
            None => all_indexed = false,
        }
        states.push(next);
    }
    Ok(Trajectory {
        states,
        seed,
        selections: all_indexed.then_some(selections),
    })
}

#[derive(Clone, Debug)]
pub struct EnsembleOptions {
    pub n_bins: usize,
    pub range: BinRange,
    pub divergence_bound: f64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            n_bins: 10,
            range: BinRange::Auto,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

/// Advance every particle `n_steps`; particle `i` uses stream `i` of `seed`.
pub fn advance_ensemble<S: IteratedSystem + ?Sized>(
    ifs: &S,
    particles: &[StateVector],
    n_steps: usize,
    seed: u64,
    bound: f64,
) -> Result<Vec<StateVector>> {
    if particles.is_empty() {
        return Err(Error::invalid("ensemble needs at least one particle"));
    }
    let results: Vec<Result<StateVector>> = particles
        .par_iter()
        .enumerate()
        .map(|(id, x0)| {
            let mut rng = RandomSource::new(seed, id as u64);
            let mut x = x0.clone();
            for k in 0..n_steps {
                x = ifs.advance(&x, &mut rng, bound).map_err(|e| e.at_step(k))?.0;
            }
            Ok(x)
        })
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(particle, r)| {
            r.map_err(|source| Error::ParticleDiverged {
                particle,
                source: Box::new(source),
            })
        })
        .collect()
}

/// Particle approximation of `Pⁿμ` for the empirical initial measure `μ`.
pub fn run_ensemble<S: IteratedSystem + ?Sized>(
    ifs: &S,
    initial: &[StateVector],
    n_steps: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    run_ensemble_with(ifs, initial, n_steps, seed, &EnsembleOptions::default())
}

pub fn run_ensemble_with<S: IteratedSystem + ?Sized>(
    ifs: &S,
    initial: &[StateVector],
    n_steps: usize,
    seed: u64,
    options: &EnsembleOptions,
) -> Result<EmpiricalMeasure> {
    let finals = advance_ensemble(ifs, initial, n_steps, seed, options.divergence_bound)?;
    EmpiricalMeasure::from_states(&finals, options.n_bins, &options.range)
}

/// The two-map system `x/2`, `(x+1)/2` with equal weights; its invariant
/// measure is uniform on `[0, 1]`.
pub fn bernoulli_ifs() -> DiscreteIfs {
    DiscreteIfs::with_constant_probabilities(
        vec![IfsMap::scalar(|x| x / 2.0), IfsMap::scalar(|x| (x + 1.0) / 2.0)],
        vec![0.5, 0.5],
    )
    .expect("valid constant probabilities")
}
