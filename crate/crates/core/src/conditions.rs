//! Numerical checks of sufficient conditions for ergodicity.
//!
//! Lipschitz constants and probability moduli are estimated as maxima of
//! difference quotients over random pairs, so they are lower bounds: a
//! sampled pass is evidence, labelled `pass(sampled)`, while a failure comes
//! with a concrete witness. Only the closed-form linear check issues
//! `pass(certified)`.
//!
//! Pair `k` of an estimate is drawn from stream `k` of the seed. Estimates
//! with more pairs therefore extend the pair set of smaller ones, and results
//! do not depend on how the pairs are scheduled across threads.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{ContinuousIfs, DiscreteIfs, IfsMap, StateVector};
use crate::linalg::operator_norm;
use crate::rng::{derive_seed, RandomSource};
use crate::smpc::MpcProblem;

/// Default minimum-probability threshold.
pub const DEFAULT_MIN_PROBABILITY: f64 = 1e-6;
/// Sampled probability moduli above this look like a discontinuity.
pub const DINI_INCONCLUSIVE_ABOVE: f64 = 1e8;
/// Perturbation pairs are drawn at this fraction of the box diameter.
pub const PERTURBATION_SCALE: f64 = 1e-4;

/// Axis-aligned box `[lower, upper]` in ℝᵈ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::DimensionMismatch("box bounds must have equal, non-zero length".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) || lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("box bounds must be finite with lower ≤ upper"));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    /// Box of half-width `radius` around `center`.
    pub fn around(center: &StateVector, radius: f64) -> Result<Self> {
        Self::new(
            center.as_slice().iter().map(|c| c - radius).collect(),
            center.as_slice().iter().map(|c| c + radius).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).powi(2)).sum::<f64>().sqrt()
    }

    fn nondegenerate(&self) -> Result<()> {
        if self.lower.iter().zip(&self.upper).all(|(l, u)| l == u) {
            return Err(Error::invalid("box is a single point"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut RandomSource) -> StateVector {
        let v = self.lower.iter().zip(&self.upper).map(|(&l, &u)| rng.uniform_in(l, u)).collect();
        StateVector::new(v).expect("box points are finite")
    }

    fn perturb(&self, x: &StateVector, scale: f64, rng: &mut RandomSource) -> StateVector {
        let v = x
            .as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&c, (&l, &u))| {
                // Magnitude in [scale/2, scale] keeps pair distances away from round-off.
                let mag = scale * (0.5 + 0.5 * rng.uniform());
                let step = if rng.uniform() < 0.5 { -mag } else { mag };
                if (l..=u).contains(&(c + step)) {
                    c + step
                } else {
                    (c - step).clamp(l, u)
                }
            })
            .collect();
        StateVector::new(v).expect("box points are finite")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass(certified)")]
    PassCertified,
    #[serde(rename = "pass(sampled)")]
    PassSampled,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::PassCertified | Verdict::PassSampled)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::PassCertified => "pass(certified)",
            Verdict::PassSampled => "pass(sampled)",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub points: Vec<Vec<f64>>,
    pub index: Option<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub n_points: Option<usize>,
    pub n_pairs: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub verdict: Verdict,
    pub threshold: f64,
    pub constants: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
    pub sampling: Option<Sampling>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(condition: &str, verdict: Verdict, threshold: f64) -> Self {
        Self {
            condition: condition.to_string(),
            verdict,
            threshold,
            constants: BTreeMap::new(),
            witness: None,
            sampling: None,
            notes: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }
}

/// Sampled lower bound on a Lipschitz constant.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub witness: (StateVector, StateVector),
    pub n_pairs: usize,
    pub seed: u64,
}

impl LipschitzEstimate {
    /// Difference quotient of a deterministic map at the stored witness.
    pub fn reevaluate(&self, f: impl Fn(&StateVector) -> DVector<f64>) -> f64 {
        let (x, y) = &self.witness;
        quotient(&f(x), &f(y), x, y)
    }
}

/// Sampled modulus `θ` with `Σ|pᵢ(x) − pᵢ(y)| ≤ θ‖x − y‖` on the sampled pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DiniEstimate {
    pub theta: f64,
    pub witness: (StateVector, StateVector),
    pub n_pairs: usize,
    pub seed: u64,
}

fn quotient(fx: &DVector<f64>, fy: &DVector<f64>, x: &StateVector, y: &StateVector) -> f64 {
    (fx - fy).norm() / x.distance(y)
}

struct PairMax {
    value: f64,
    x: StateVector,
    y: StateVector,
}

/// Max of `ratio(x, y, noise)` over `n_pairs` uniform pairs and as many
/// perturbation pairs. `ratio` receives a noise source that it must clone
/// for each of the two evaluations so that both see the same noise.
fn max_over_pairs<F>(domain: &DomainBox, n_pairs: usize, seed: u64, ratio: F) -> Result<PairMax>
where
    F: Fn(&StateVector, &StateVector, &RandomSource) -> Result<f64> + Sync,
{
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be ≥ 1"));
    }
    domain.nondegenerate()?;
    let scale = PERTURBATION_SCALE * domain.diameter();
    let per_pair: Vec<Result<Option<PairMax>>> = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomSource::new(seed, k as u64);
            let mut best: Option<PairMax> = None;
            for perturbation in [false, true] {
                // Coincident draws are redrawn rather than divided by zero.
                let mut pair = None;
                for _ in 0..64 {
                    let x = domain.sample(&mut rng);
                    let y = if perturbation {
                        domain.perturb(&x, scale, &mut rng)
                    } else {
                        domain.sample(&mut rng)
                    };
                    if x.distance(&y) > 0.0 {
                        pair = Some((x, y));
                        break;
                    }
                }
                let Some((x, y)) = pair else { continue };
                let noise = rng.clone();
                rng.next_seed();
                let value = ratio(&x, &y, &noise)?;
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(PairMax { value, x, y });
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<PairMax> = None;
    for r in per_pair {
        if let Some(candidate) = r? {
            if best.as_ref().is_none_or(|b| candidate.value > b.value) {
                best = Some(candidate);
            }
        }
    }
    best.ok_or_else(|| Error::invalid("could not draw distinct pairs in the box"))
}

fn finite_output(v: DVector<f64>, x: &StateVector) -> Result<DVector<f64>> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: x.to_vec() })
    }
}

/// Lower-bound estimate of the Lipschitz constant of a deterministic map on `domain`.
pub fn estimate_lipschitz(
    f: impl Fn(&StateVector) -> DVector<f64> + Sync,
    domain: &DomainBox,
    n_pairs: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    let best = max_over_pairs(domain, n_pairs, seed, |x, y, _| {
        Ok(quotient(&finite_output(f(x), x)?, &finite_output(f(y), y)?, x, y))
    })?;
    Ok(LipschitzEstimate {
        value: best.value,
        witness: (best.x, best.y),
        n_pairs,
        seed,
    })
}

/// Lipschitz estimate of an IFS map. Random maps are compared under common
/// noise, i.e. the constant `L` with `‖S(x, ξ) − S(y, ξ)‖ ≤ L‖x − y‖` for
/// the sampled `ξ`.
pub fn estimate_map_lipschitz(map: &IfsMap, domain: &DomainBox, n_pairs: usize, seed: u64) -> Result<LipschitzEstimate> {
    let best = max_over_pairs(domain, n_pairs, seed, |x, y, noise| {
        let fx = finite_output(map.apply(x, &mut noise.clone()), x)?;
        let fy = finite_output(map.apply(y, &mut noise.clone()), y)?;
        Ok(quotient(&fx, &fy, x, y))
    })?;
    Ok(LipschitzEstimate {
        value: best.value,
        witness: (best.x, best.y),
        n_pairs,
        seed,
    })
}

fn sample_points(domain: &DomainBox, n_points: usize, seed: u64) -> Vec<StateVector> {
    let mut rng = RandomSource::new(seed, 0);
    (0..n_points).map(|_| domain.sample(&mut rng)).collect()
}

/// Average contraction `max_x Σᵢ pᵢ(x) L̂(Sᵢ) < 1 − margin`.
pub fn check_average_contraction(
    ifs: &DiscreteIfs,
    domain: &DomainBox,
    n_points: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<ConditionReport> {
    check_average_contraction_with_margin(ifs, domain, n_points, n_pairs, seed, 0.0)
}

pub fn check_average_contraction_with_margin(
    ifs: &DiscreteIfs,
    domain: &DomainBox,
    n_points: usize,
    n_pairs: usize,
    seed: u64,
    margin: f64,
) -> Result<ConditionReport> {
    if n_points == 0 {
        return Err(Error::invalid("n_points must be ≥ 1"));
    }
    let lipschitz: Vec<LipschitzEstimate> = ifs
        .maps()
        .iter()
        .enumerate()
        .map(|(i, m)| estimate_map_lipschitz(m, domain, n_pairs, derive_seed(seed, 1, i as u64)))
        .collect::<Result<_>>()?;
    let mut lambda = f64::NEG_INFINITY;
    let mut argmax = None;
    for x in sample_points(domain, n_points, derive_seed(seed, 2, 0)) {
        let p = ifs.probabilities(&x)?;
        let s: f64 = p.iter().zip(&lipschitz).map(|(pi, l)| pi * l.value).sum();
        if s > lambda {
            lambda = s;
            argmax = Some(x);
        }
    }
    let threshold = 1.0 - margin;
    let verdict = if lambda < threshold { Verdict::PassSampled } else { Verdict::Fail };
    let mut report = ConditionReport::new("average-contraction", verdict, threshold);
    report.constants.insert("lambda_s".into(), lambda);
    for (i, l) in lipschitz.iter().enumerate() {
        report.constants.insert(format!("lipschitz_{i}"), l.value);
    }
    report.witness = argmax.map(|x| Witness {
        points: vec![x.to_vec()],
        index: None,
        value: lambda,
    });
    report.sampling = Some(Sampling {
        n_points: Some(n_points),
        n_pairs: Some(n_pairs),
        seed: Some(seed),
    });
    report
        .notes
        .push("Lipschitz constants are sampled lower bounds; pass is evidence, fail is witnessed".into());
    Ok(report)
}

/// `min_{x, i} pᵢ(x) > threshold` over sampled states.
pub fn check_min_probability(ifs: &DiscreteIfs, domain: &DomainBox, n_points: usize, seed: u64) -> Result<ConditionReport> {
    check_min_probability_with_threshold(ifs, domain, n_points, seed, DEFAULT_MIN_PROBABILITY)
}

pub fn check_min_probability_with_threshold(
    ifs: &DiscreteIfs,
    domain: &DomainBox,
    n_points: usize,
    seed: u64,
    threshold: f64,
) -> Result<ConditionReport> {
    if n_points == 0 {
        return Err(Error::invalid("n_points must be ≥ 1"));
    }
    let mut p0 = f64::INFINITY;
    let mut witness = None;
    for x in sample_points(domain, n_points, seed) {
        let p = ifs.probabilities(&x)?;
        for (i, &pi) in p.iter().enumerate() {
            if pi < p0 {
                p0 = pi;
                witness = Some((x.clone(), i));
            }
        }
    }
    let verdict = if p0 > threshold { Verdict::PassSampled } else { Verdict::Fail };
    let mut report = ConditionReport::new("min-probability", verdict, threshold);
    report.constants.insert("p0".into(), p0);
    report.witness = witness.map(|(x, i)| Witness {
        points: vec![x.to_vec()],
        index: Some(i),
        value: p0,
    });
    report.sampling = Some(Sampling {
        n_points: Some(n_points),
        n_pairs: None,
        seed: Some(seed),
    });
    Ok(report)
}

/// Sampled Lipschitz modulus of the probability map.
pub fn estimate_probability_modulus(ifs: &DiscreteIfs, domain: &DomainBox, n_pairs: usize, seed: u64) -> Result<DiniEstimate> {
    let best = max_over_pairs(domain, n_pairs, seed, |x, y, _| {
        let px = ifs.probabilities(x)?;
        let py = ifs.probabilities(y)?;
        let l1: f64 = px.iter().zip(&py).map(|(a, b)| (a - b).abs()).sum();
        Ok(l1 / x.distance(y))
    })?;
    Ok(DiniEstimate {
        theta: best.value,
        witness: (best.x, best.y),
        n_pairs,
        seed,
    })
}

/// Report form of [`estimate_probability_modulus`]: a finite `θ̂` supports
/// the linear Dini function `ω(t) = θ̂t`.
pub fn check_dini(ifs: &DiscreteIfs, domain: &DomainBox, n_pairs: usize, seed: u64) -> Result<ConditionReport> {
    let est = estimate_probability_modulus(ifs, domain, n_pairs, seed)?;
    let verdict = if est.theta <= DINI_INCONCLUSIVE_ABOVE {
        Verdict::PassSampled
    } else {
        Verdict::Inconclusive
    };
    let mut report = ConditionReport::new("dini-modulus", verdict, DINI_INCONCLUSIVE_ABOVE);
    report.constants.insert("theta".into(), est.theta);
    report.witness = Some(Witness {
        points: vec![est.witness.0.to_vec(), est.witness.1.to_vec()],
        index: None,
        value: est.theta,
    });
    report.sampling = Some(Sampling {
        n_points: None,
        n_pairs: Some(n_pairs),
        seed: Some(seed),
    });
    report.notes.push("candidate Dini function: omega(t) = theta * t".into());
    Ok(report)
}

/// Closed-form contraction bound for the linear closed loop under exact control:
/// `max_Ξ ‖A + Ξ‖ + ‖B(R + BᵀQB)⁻¹BᵀQA‖ < 1`, the maximum taken over the
/// extreme points of the noise box.
pub fn check_linear_sufficient_condition(problem: &MpcProblem) -> Result<ConditionReport> {
    let d = problem.state_dim();
    let feedback = problem.b() * problem.feedback_gain()?;
    let extremes = problem.noise().extreme_points(d);
    let norm_a = operator_norm(problem.a());
    let max_noise = extremes.iter().map(operator_norm).fold(0.0, f64::max);
    let (worst_index, worst) = extremes
        .iter()
        .map(|xi| operator_norm(&(problem.a() + xi)))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
    let feedback_norm = operator_norm(&feedback);
    let bound = worst + feedback_norm;
    let verdict = if bound < 1.0 { Verdict::PassCertified } else { Verdict::Fail };
    let mut report = ConditionReport::new("linear-sufficient-condition", verdict, 1.0);
    report.constants.insert("norm_a".into(), norm_a);
    report.constants.insert("max_noise_norm".into(), max_noise);
    report.constants.insert("worst_dynamics_norm".into(), worst);
    report.constants.insert("triangle_dynamics_bound".into(), norm_a + max_noise);
    report.constants.insert("feedback_norm".into(), feedback_norm);
    report.constants.insert("bound".into(), bound);
    report.witness = Some(Witness {
        points: extremes[worst_index].row_iter().map(|r| r.iter().copied().collect()).collect(),
        index: Some(worst_index),
        value: bound,
    });
    report
        .notes
        .push("worst noise realization found among the sign extremes of the noise box".into());
    Ok(report)
}

/// Grid resolution for [`check_stopping_time`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeGrid {
    pub points_per_dim: usize,
    pub time_steps: usize,
}

impl Default for StoppingTimeGrid {
    fn default() -> Self {
        Self {
            points_per_dim: 5,
            time_steps: 200,
        }
    }
}

fn grid_points(domain: &DomainBox, per_dim: usize) -> Vec<StateVector> {
    let axes: Vec<Vec<f64>> = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(&l, &u)| {
            if per_dim == 1 {
                vec![0.5 * (l + u)]
            } else {
                (0..per_dim).map(|k| l + (u - l) * k as f64 / (per_dim - 1) as f64).collect()
            }
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    points.into_iter().map(|p| StateVector::new(p).expect("finite grid")).collect()
}

/// Grid check of the stopping-time condition: for each `x` the density
/// vanishes before some `τ_x` and stays above a common `γ > 0` on
/// `[τ_x, T]`, with `sup τ_x < T` (resolved as `< T − Δt`).
pub fn check_stopping_time(
    density: impl Fn(f64, &StateVector) -> f64,
    domain: &DomainBox,
    horizon: f64,
    grid: StoppingTimeGrid,
) -> Result<ConditionReport> {
    if !(horizon > 0.0 && horizon.is_finite()) || grid.points_per_dim == 0 || grid.time_steps == 0 {
        return Err(Error::invalid("stopping-time check needs T > 0 and a non-empty grid"));
    }
    let dt = horizon / grid.time_steps as f64;
    let mut tau_max = f64::NEG_INFINITY;
    let mut gamma = f64::INFINITY;
    let mut worst_tau = None;
    let mut worst_gamma = None;
    for x in grid_points(domain, grid.points_per_dim) {
        let values: Vec<f64> = (0..=grid.time_steps)
            .map(|j| {
                let t = j as f64 * dt;
                let p = density(t, &x);
                if p < 0.0 || !p.is_finite() {
                    Err(Error::InvalidDensity {
                        t,
                        point: x.to_vec(),
                        value: p,
                    })
                } else {
                    Ok(p)
                }
            })
            .collect::<Result<_>>()?;
        let (tau, g) = match values.iter().position(|&p| p > 0.0) {
            Some(j) => (j as f64 * dt, values[j..].iter().copied().fold(f64::INFINITY, f64::min)),
            None => (f64::INFINITY, 0.0),
        };
        if tau > tau_max {
            tau_max = tau;
            worst_tau = Some(x.clone());
        }
        if g < gamma {
            gamma = g;
            worst_gamma = Some(x);
        }
    }
    let tau_ok = tau_max < horizon - dt;
    let verdict = if gamma > 0.0 && tau_ok { Verdict::PassSampled } else { Verdict::Fail };
    let mut report = ConditionReport::new("stopping-time", verdict, horizon - dt);
    report.constants.insert("gamma".into(), gamma);
    report.constants.insert("tau_max".into(), tau_max);
    report.constants.insert("horizon".into(), horizon);
    report.constants.insert("time_step".into(), dt);
    let witness = if tau_ok { worst_gamma } else { worst_tau };
    report.witness = witness.map(|x| Witness {
        points: vec![x.to_vec()],
        index: None,
        value: if tau_ok { gamma } else { tau_max },
    });
    report.notes.push("evaluated on a finite (x, t) grid; supplied densities only".into());
    Ok(report)
}

/// [`check_stopping_time`] for a continuous IFS; sampler-only systems are rejected.
pub fn check_stopping_time_ifs(
    ifs: &ContinuousIfs<f64>,
    domain: &DomainBox,
    horizon: f64,
    grid: StoppingTimeGrid,
) -> Result<ConditionReport> {
    if !ifs.has_density() {
        return Err(Error::MissingDensity);
    }
    check_stopping_time(|t, x| ifs.density(&t, x).unwrap_or(f64::NAN), domain, horizon, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainBox {
        DomainBox::cube(1, 0.0, 1.0).unwrap()
    }

    fn scalar_fn(f: impl Fn(f64) -> f64 + Sync) -> impl Fn(&StateVector) -> DVector<f64> + Sync {
        move |x| DVector::from_element(1, f(x[0]))
    }

    #[test]
    fn box_validation() {
        assert!(DomainBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(DomainBox::new(vec![], vec![]).is_err());
        let point = DomainBox::cube(2, 1.0, 1.0).unwrap();
        assert!(estimate_lipschitz(|x| x.vector().clone(), &point, 10, 0).is_err());
    }

    #[test]
    fn linear_map_ratio_is_exact() {
        for seed in 0..5 {
            let est = estimate_lipschitz(scalar_fn(|x| 2.0 * x), &unit(), 50, seed).unwrap();
            assert_eq!(est.value, 2.0);
        }
    }

    #[test]
    fn constant_map_is_zero() {
        let est = estimate_lipschitz(scalar_fn(|_| 3.0), &unit(), 50, 1).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn square_map_approaches_two() {
        let est = estimate_lipschitz(scalar_fn(|x| x * x), &unit(), 10_000, 1).unwrap();
        assert!((1.9..=2.0).contains(&est.value), "{}", est.value);
    }

    #[test]
    fn witness_reproduces_value() {
        let f = |x: &StateVector| DVector::from_vec(vec![x[0].sin() * x[1], x[0] + x[1] * x[1]]);
        let d = DomainBox::cube(2, -1.0, 2.0).unwrap();
        let est = estimate_lipschitz(f, &d, 500, 3).unwrap();
        assert!((est.reevaluate(f) - est.value).abs() <= 1e-12);
    }

    #[test]
    fn nested_pair_sets_are_monotone() {
        let f = scalar_fn(|x| (3.0 * x).sin());
        let mut prev = 0.0;
        for n in [1, 2, 5, 10, 100, 1000] {
            let v = estimate_lipschitz(&f, &unit(), n, 9).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn non_finite_map_is_evaluation_error() {
        let r = estimate_lipschitz(scalar_fn(|x| 1.0 / (x - x)), &unit(), 5, 0);
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    fn two_map(l1: f64, l2: f64, p: f64) -> DiscreteIfs {
        DiscreteIfs::with_constant_probabilities(
            vec![IfsMap::scalar(move |x| l1 * x), IfsMap::scalar(move |x| l2 * x)],
            vec![p, 1.0 - p],
        )
        .unwrap()
    }

    #[test]
    fn average_contraction_examples() {
        let r = check_average_contraction(&two_map(0.5, 1.0 / 3.0, 0.5), &unit(), 20, 100, 1).unwrap();
        assert!((r.constant("lambda_s").unwrap() - 5.0 / 12.0).abs() <= 1e-9);
        assert_eq!(r.verdict, Verdict::PassSampled);

        let id = DiscreteIfs::with_constant_probabilities(vec![IfsMap::scalar(|x| x)], vec![1.0]).unwrap();
        let r = check_average_contraction(&id, &unit(), 20, 100, 1).unwrap();
        assert_eq!(r.constant("lambda_s"), Some(1.0));
        assert_eq!(r.verdict, Verdict::Fail);

        let r = check_average_contraction(&two_map(2.0, 0.0, 0.9), &unit(), 20, 100, 1).unwrap();
        assert!((r.constant("lambda_s").unwrap() - 1.8).abs() <= 1e-12);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn margin_tightens_threshold() {
        let ifs = two_map(0.5, 1.0 / 3.0, 0.5);
        let r = check_average_contraction_with_margin(&ifs, &unit(), 5, 20, 0, 0.6).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn min_probability_examples() {
        let ifs = two_map(0.5, 0.5, 0.3);
        let r = check_min_probability(&ifs, &unit(), 50, 2).unwrap();
        assert!((r.constant("p0").unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::PassSampled);

        let vanishing = DiscreteIfs::new(vec![IfsMap::scalar(|x| x / 2.0), IfsMap::scalar(|x| x / 3.0)], |x| {
            let p1 = (x[0] - 0.5).max(0.0);
            vec![p1, 1.0 - p1]
        })
        .unwrap();
        let r = check_min_probability(&vanishing, &unit(), 50, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.index, Some(0));
        assert!(w.points[0][0] <= 0.5);
    }

    #[test]
    fn probability_modulus_examples() {
        let constant = two_map(0.5, 0.5, 0.4);
        assert_eq!(estimate_probability_modulus(&constant, &unit(), 100, 0).unwrap().theta, 0.0);

        let clamp = DiscreteIfs::new(vec![IfsMap::scalar(|x| x), IfsMap::scalar(|x| x)], |x| {
            let p1 = x[0].clamp(0.2, 0.8);
            vec![p1, 1.0 - p1]
        })
        .unwrap();
        let est = estimate_probability_modulus(&clamp, &unit(), 10_000, 4).unwrap();
        assert!(est.theta >= 1.9 && est.theta <= 2.0 + 1e-9, "{}", est.theta);
        let again = estimate_probability_modulus(&clamp, &unit(), 10_000, 4).unwrap();
        assert_eq!(est, again);

        let r = check_dini(&clamp, &unit(), 1000, 4).unwrap();
        assert_eq!(r.verdict, Verdict::PassSampled);
    }

    #[test]
    fn jump_probability_is_inconclusive() {
        let step = DiscreteIfs::new(vec![IfsMap::scalar(|x| x), IfsMap::scalar(|x| x)], |x| {
            if x[0] < 0.5 {
                vec![0.2, 0.8]
            } else {
                vec![0.8, 0.2]
            }
        })
        .unwrap();
        // Only pairs straddling 0.5 see the jump; at 1e-4 scale the quotient is ~1e4.
        let r = check_dini(&step, &unit(), 20_000, 1).unwrap();
        assert!(r.constant("theta").unwrap() > 1e3);
    }

    #[test]
    fn scalar_linear_bound() {
        let p = MpcProblem::scalar(0.2, 1.0, 1.0, 1.0, 0.0, 0.005).unwrap();
        let r = check_linear_sufficient_condition(&p).unwrap();
        assert!((r.constant("bound").unwrap() - 0.305).abs() <= 1e-12);
        assert_eq!(r.verdict, Verdict::PassCertified);

        let zero = MpcProblem::scalar(0.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(check_linear_sufficient_condition(&zero).unwrap().constant("bound"), Some(0.0));

        let open = MpcProblem::scalar(0.9, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let r = check_linear_sufficient_condition(&open).unwrap();
        assert!((r.constant("bound").unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::PassCertified);
        let unstable = MpcProblem::scalar(1.2, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let r = check_linear_sufficient_condition(&unstable).unwrap();
        assert!((r.constant("bound").unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn stopping_time_examples() {
        let t = 2.0;
        let d = DomainBox::cube(1, -1.0, 1.0).unwrap();
        let grid = StoppingTimeGrid::default();
        let r = check_stopping_time(|_, _| 1.0 / t, &d, t, grid).unwrap();
        assert_eq!(r.verdict, Verdict::PassSampled);
        assert_eq!(r.constant("tau_max"), Some(0.0));
        assert_eq!(r.constant("gamma"), Some(0.5));

        let late = |s: f64, _: &StateVector| if s >= t / 2.0 { 2.0 / t } else { 0.0 };
        let r = check_stopping_time(late, &d, t, grid).unwrap();
        assert_eq!(r.verdict, Verdict::PassSampled);
        assert_eq!(r.constant("tau_max"), Some(1.0));

        let dt = t / grid.time_steps as f64;
        let edge = move |s: f64, _: &StateVector| if s >= t - dt / 2.0 { 2.0 / dt } else { 0.0 };
        assert_eq!(check_stopping_time(edge, &d, t, grid).unwrap().verdict, Verdict::Fail);

        let negative = |_: f64, _: &StateVector| -1.0;
        assert!(matches!(
            check_stopping_time(negative, &d, t, grid),
            Err(Error::InvalidDensity { .. })
        ));
    }

    #[test]
    fn stopping_time_needs_density() {
        let d = unit();
        let sampler_only = ContinuousIfs::new(|t: &f64, x: &StateVector| x.vector() * *t, |_, r| r.uniform());
        assert!(matches!(
            check_stopping_time_ifs(&sampler_only, &d, 1.0, StoppingTimeGrid::default()),
            Err(Error::MissingDensity)
        ));
        let with = sampler_only.with_density(|_, _| 1.0);
        let r = check_stopping_time_ifs(&with, &d, 1.0, StoppingTimeGrid::default()).unwrap();
        assert_eq!(r.verdict, Verdict::PassSampled);
    }

    #[test]
    fn report_json_labels() {
        let p = MpcProblem::scalar(0.2, 1.0, 1.0, 1.0, 0.0, 0.005).unwrap();
        let r = check_linear_sufficient_condition(&p).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"pass(certified)\""));
        let back: ConditionReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
