//! Linear-quadratic stochastic MPC and its IFS adapters.
//!
//! The plant is `x⁺ = (A + Ξ)x + Bu` with `Ξ` a sparse matrix of independent
//! `U[-h, h]` entries. The controller minimizes the one-step tracking cost
//! `E[(x⁺ − z)ᵀQ(x⁺ − z)] + uᵀRu`; the prediction horizon is one step. Since
//! the objective is quadratic, both the exact and the sample-average
//! controllers reduce to the normal equations
//!
//! ```text
//! (R + BᵀQB) u = −BᵀQ(Ā x − z)
//! ```
//!
//! with `Ā = A` (exact, using `E[Ξ] = 0`) or `Ā = A + (1/J)ΣΞⱼ` (SAA).
//! [`projected_gradient`] covers other smooth convex objectives.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{ContinuousIfs, DiscreteIfs, IfsMap, StateVector};
use crate::linalg::{is_symmetric, random_orthonormal, spd_condition_number, spectral_compose, symmetric_eigenvalues};
use crate::rng::RandomSource;

/// Largest accepted condition number of `R + BᵀQB`.
pub const MAX_CONDITION: f64 = 1e12;

/// Sparse additive noise: each listed `(row, col)` entry is independently `U[-bound, bound]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub pattern: Vec<(usize, usize)>,
    pub bound: f64,
}

impl NoiseSpec {
    /// Two entries at `(0, 1)` and `(2, 2)` with half-width `0.005`.
    pub fn reference() -> Self {
        Self {
            pattern: vec![(0, 1), (2, 2)],
            bound: 0.005,
        }
    }

    pub fn none() -> Self {
        Self {
            pattern: Vec::new(),
            bound: 0.0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.bound.is_finite() && self.bound >= 0.0) {
            return Err(Error::invalid(format!("noise bound {} must be finite and ≥ 0", self.bound)));
        }
        for (k, &(i, j)) in self.pattern.iter().enumerate() {
            if i >= d || j >= d {
                return Err(Error::invalid(format!("noise position ({i}, {j}) outside {d}×{d}")));
            }
            if self.pattern[..k].contains(&(i, j)) {
                return Err(Error::invalid(format!("duplicate noise position ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// One draw of `Ξ`, consuming one uniform per pattern entry in order.
    pub fn sample(&self, d: usize, rng: &mut RandomSource) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(d, d);
        for &(i, j) in &self.pattern {
            m[(i, j)] = rng.symmetric(self.bound);
        }
        m
    }

    /// Mean of `count` independent draws.
    pub fn sample_mean(&self, d: usize, count: usize, rng: &mut RandomSource) -> DMatrix<f64> {
        let mut sum = DMatrix::zeros(d, d);
        for _ in 0..count {
            for &(i, j) in &self.pattern {
                sum[(i, j)] += rng.symmetric(self.bound);
            }
        }
        sum / count as f64
    }

    /// All `2^k` sign patterns `Ξ ∈ {−h, h}^k`.
    pub fn extreme_points(&self, d: usize) -> Vec<DMatrix<f64>> {
        let k = self.pattern.len();
        (0..1usize << k)
            .map(|mask| {
                let mut m = DMatrix::zeros(d, d);
                for (bit, &(i, j)) in self.pattern.iter().enumerate() {
                    m[(i, j)] = if mask >> bit & 1 == 1 { self.bound } else { -self.bound };
                }
                m
            })
            .collect()
    }

    /// Variance of a single entry, `h²/3`.
    pub fn entry_variance(&self) -> f64 {
        self.bound * self.bound / 3.0
    }

    pub fn contains(&self, xi: &DMatrix<f64>) -> bool {
        xi.iter().all(|v| v.abs() <= self.bound)
            && xi
                .iter()
                .enumerate()
                .all(|(idx, v)| *v == 0.0 || self.pattern.contains(&(idx % xi.nrows(), idx / xi.nrows())))
    }
}

/// `(A, B, Q, R, z, noise)` for `x⁺ = (A + Ξ)x + Bu` tracking `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemDocument", into = "ProblemDocument")]
pub struct MpcProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    z: DVector<f64>,
    noise: NoiseSpec,
}

impl MpcProblem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        z: DVector<f64>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let d = a.nrows();
        let m = b.ncols();
        let shape = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!("{name} is {got:?}, expected {want:?}")))
            }
        };
        if d == 0 || m == 0 {
            return Err(Error::invalid("state and control dimensions must be ≥ 1"));
        }
        shape("A", a.shape(), (d, d))?;
        shape("B", b.shape(), (d, m))?;
        shape("Q", q.shape(), (d, d))?;
        shape("R", r.shape(), (m, m))?;
        shape("z", (z.len(), 1), (d, 1))?;
        let all_finite = [&a, &b, &q, &r].iter().all(|x| x.iter().all(|v| v.is_finite())) && z.iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("problem data must be finite"));
        }
        if !is_symmetric(&q, 1e-10) || symmetric_eigenvalues(&q)[0] < -1e-10 * q.amax().max(1.0) {
            return Err(Error::invalid("Q must be symmetric positive semidefinite"));
        }
        if !is_symmetric(&r, 1e-10) || symmetric_eigenvalues(&r)[0] <= 0.0 {
            return Err(Error::invalid("R must be symmetric positive definite"));
        }
        noise.validate(d)?;
        Ok(Self { a, b, q, r, z, noise })
    }

    /// One-dimensional instance with noise on the single entry.
    pub fn scalar(a: f64, b: f64, q: f64, r: f64, z: f64, h: f64) -> Result<Self> {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let noise = if h > 0.0 {
            NoiseSpec {
                pattern: vec![(0, 0)],
                bound: h,
            }
        } else {
            NoiseSpec::none()
        };
        Self::new(one(a), one(b), one(q), one(r), DVector::from_element(1, z), noise)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Same problem with a different noise half-width.
    pub fn with_noise_bound(&self, bound: f64) -> Result<Self> {
        let mut p = self.clone();
        p.noise.bound = bound;
        p.noise.validate(p.state_dim())?;
        Ok(p)
    }

    /// `R + BᵀQB`, symmetrized.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let m = &self.r + self.b.transpose() * &self.q * &self.b;
        (&m + m.transpose()) * 0.5
    }

    /// Factor the normal equations once for repeated control evaluation.
    pub fn controller(&self) -> Result<Controller> {
        let normal = self.normal_matrix();
        let condition = spd_condition_number(&normal);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularNormalMatrix { condition });
        }
        let chol = Cholesky::new(normal).ok_or(Error::SingularNormalMatrix { condition })?;
        Ok(Controller {
            chol,
            btq: self.b.transpose() * &self.q,
            problem: self.clone(),
        })
    }

    /// Closed-loop feedback matrix `K = (R + BᵀQB)⁻¹BᵀQA`, so that the exact
    /// control is `u = −K x + (R + BᵀQB)⁻¹BᵀQz`.
    pub fn feedback_gain(&self) -> Result<DMatrix<f64>> {
        let c = self.controller()?;
        Ok(c.chol.solve(&(&c.btq * &self.a)))
    }

    /// `E[(x⁺ − z)ᵀQ(x⁺ − z)] + uᵀRu` in closed form. Uses `E[Ξ] = 0` and
    /// independence of the noise entries.
    pub fn expected_cost(&self, x: &StateVector, u: &DVector<f64>) -> f64 {
        let x = x.vector();
        let e = &self.a * x + &self.b * u - &self.z;
        let mean_part = (e.transpose() * &self.q * &e)[(0, 0)];
        let var = self.noise.entry_variance();
        let noise_part: f64 = self.noise.pattern.iter().map(|&(i, j)| var * x[j] * x[j] * self.q[(i, i)]).sum();
        mean_part + noise_part + (u.transpose() * &self.r * u)[(0, 0)]
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemDocument {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    z: Vec<f64>,
    noise: NoiseSpec,
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid(format!("{name}: ragged rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl TryFrom<ProblemDocument> for MpcProblem {
    type Error = Error;

    fn try_from(doc: ProblemDocument) -> Result<Self> {
        MpcProblem::new(
            from_rows("A", &doc.a)?,
            from_rows("B", &doc.b)?,
            from_rows("Q", &doc.q)?,
            from_rows("R", &doc.r)?,
            DVector::from_vec(doc.z),
            doc.noise,
        )
    }
}

impl From<MpcProblem> for ProblemDocument {
    fn from(p: MpcProblem) -> Self {
        ProblemDocument {
            a: to_rows(&p.a),
            b: to_rows(&p.b),
            q: to_rows(&p.q),
            r: to_rows(&p.r),
            z: p.z.iter().copied().collect(),
            noise: p.noise,
        }
    }
}

/// Factored normal equations of one problem.
#[derive(Clone, Debug)]
pub struct Controller {
    chol: Cholesky<f64, Dyn>,
    btq: DMatrix<f64>,
    problem: MpcProblem,
}

impl Controller {
    pub fn problem(&self) -> &MpcProblem {
        &self.problem
    }

    /// Solve `(R + BᵀQB)u = −BᵀQ(Āx − z)` for a given effective dynamics `Ā`.
    pub fn control_for(&self, a_eff: &DMatrix<f64>, x: &StateVector) -> DVector<f64> {
        let residual = a_eff * x.vector() - &self.problem.z;
        -self.chol.solve(&(&self.btq * residual))
    }

    pub fn exact(&self, x: &StateVector) -> DVector<f64> {
        self.control_for(&self.problem.a, x)
    }

    /// SAA control given the mean of the sampled noise matrices.
    pub fn saa_from_mean(&self, x: &StateVector, noise_mean: &DMatrix<f64>) -> DVector<f64> {
        self.control_for(&(&self.problem.a + noise_mean), x)
    }

    /// SAA control from `j` fresh noise draws.
    pub fn saa(&self, x: &StateVector, j: usize, rng: &mut RandomSource) -> Result<DVector<f64>> {
        if j == 0 {
            return Err(Error::invalid("SAA needs J ≥ 1 samples"));
        }
        let mean = self.problem.noise.sample_mean(self.problem.state_dim(), j, rng);
        Ok(self.saa_from_mean(x, &mean))
    }
}

fn check_state_dim(problem: &MpcProblem, x: &StateVector) -> Result<()> {
    if x.dim() != problem.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, problem expects {}",
            x.dim(),
            problem.state_dim()
        )));
    }
    Ok(())
}

/// Exact one-step control for the expected objective.
pub fn exact_control(problem: &MpcProblem, x: &StateVector) -> Result<DVector<f64>> {
    check_state_dim(problem, x)?;
    Ok(problem.controller()?.exact(x))
}

/// Sample-average control from `j` noise draws.
pub fn saa_control(problem: &MpcProblem, x: &StateVector, j: usize, rng: &mut RandomSource) -> Result<DVector<f64>> {
    check_state_dim(problem, x)?;
    problem.controller()?.saa(x, j, rng)
}

fn propagate(a: &DMatrix<f64>, xi: &DMatrix<f64>, b: &DMatrix<f64>, x: &StateVector, u: &DVector<f64>) -> DVector<f64> {
    (a + xi) * x.vector() + b * u
}

/// `(A + Ξ)x + Bu` with a fresh draw of `Ξ`.
pub fn plant_step(problem: &MpcProblem, x: &StateVector, u: &DVector<f64>, rng: &mut RandomSource) -> Result<StateVector> {
    check_state_dim(problem, x)?;
    if u.len() != problem.control_dim() {
        return Err(Error::DimensionMismatch(format!(
            "control has dimension {}, problem expects {}",
            u.len(),
            problem.control_dim()
        )));
    }
    let xi = problem.noise.sample(problem.state_dim(), rng);
    StateVector::from_vector(propagate(&problem.a, &xi, &problem.b, x, u))
}

/// Parameter of the closed-loop IFS: the SAA noise mean, the plant noise
/// realization and an optional additive solver perturbation `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopParameter {
    pub saa_mean: DMatrix<f64>,
    pub plant: DMatrix<f64>,
    pub solver: DVector<f64>,
}

/// The SMPC loop `x ↦ (A + Ξ)x + B·u_SAA(x)` as a continuously indexed IFS.
///
/// The sampler consumes randomness in the same order as calling
/// [`saa_control`] followed by [`plant_step`], so simulating this system
/// reproduces a hand-written loop draw for draw.
pub fn smpc_closed_loop_ifs(problem: &MpcProblem, j: usize) -> Result<ContinuousIfs<ClosedLoopParameter>> {
    smpc_closed_loop_ifs_with_solver_noise(problem, j, 0.0)
}

/// [`smpc_closed_loop_ifs`] plus an additive `U[-η, η]` perturbation of each
/// control component, drawn after the plant noise.
pub fn smpc_closed_loop_ifs_with_solver_noise(
    problem: &MpcProblem,
    j: usize,
    solver_noise: f64,
) -> Result<ContinuousIfs<ClosedLoopParameter>> {
    if j == 0 {
        return Err(Error::invalid("SAA needs J ≥ 1 samples"));
    }
    if !(solver_noise.is_finite() && solver_noise >= 0.0) {
        return Err(Error::invalid("solver noise must be finite and ≥ 0"));
    }
    let controller = Arc::new(problem.controller()?);
    let (d, m) = (problem.state_dim(), problem.control_dim());
    let noise = problem.noise.clone();
    let domain_noise = noise.clone();
    let c = controller.clone();
    let ifs = ContinuousIfs::new(
        move |t: &ClosedLoopParameter, x: &StateVector| {
            let mut u = c.saa_from_mean(x, &t.saa_mean);
            if !t.solver.is_empty() {
                u += &t.solver;
            }
            let p = c.problem();
            propagate(&p.a, &t.plant, &p.b, x, &u)
        },
        move |_x: &StateVector, rng: &mut RandomSource| {
            let saa_mean = noise.sample_mean(d, j, rng);
            let plant = noise.sample(d, rng);
            let solver = if solver_noise > 0.0 {
                DVector::from_fn(m, |_, _| rng.symmetric(solver_noise))
            } else {
                DVector::zeros(0)
            };
            ClosedLoopParameter { saa_mean, plant, solver }
        },
    )
    .with_domain(move |t| {
        domain_noise.contains(&t.saa_mean)
            && domain_noise.contains(&t.plant)
            && t.solver.iter().all(|v| v.abs() <= solver_noise)
    });
    Ok(ifs)
}

/// Deterministic closed-loop map `x ↦ (A + Ξ)x + B·u_exact(x)` for a fixed noise realization.
pub fn closed_loop_map(problem: &MpcProblem, xi: DMatrix<f64>) -> Result<IfsMap> {
    let c = problem.controller()?;
    Ok(IfsMap::deterministic(move |x| {
        let u = c.exact(x);
        let p = c.problem();
        propagate(&p.a, &xi, &p.b, x, &u)
    }))
}

/// Eigenvalue lists used to generate random instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub lambda_a: Vec<f64>,
    pub lambda_q: Vec<f64>,
    pub lambda_r: Vec<f64>,
    pub noise: NoiseSpec,
}

impl Default for GenerationSpec {
    fn default() -> Self {
        Self {
            lambda_a: vec![1.0 / 5.0, 1.0 / 8.0, 1.0 / 10.0, 1.0 / 12.0],
            lambda_q: vec![5.0, 6.0, 9.0, 15.0],
            lambda_r: vec![0.5, 2.0, 1.0, 1.5],
            noise: NoiseSpec::reference(),
        }
    }
}

impl GenerationSpec {
    pub fn state_dim(&self) -> usize {
        self.lambda_a.len()
    }

    pub fn control_dim(&self) -> usize {
        self.lambda_r.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.state_dim();
        if d == 0 || self.control_dim() == 0 {
            return Err(Error::invalid("empty eigenvalue list"));
        }
        if self.lambda_q.len() != d {
            return Err(Error::DimensionMismatch(format!("Λ_Q has {} entries, Λ_A has {d}", self.lambda_q.len())));
        }
        let finite = |l: &[f64]| l.iter().all(|v| v.is_finite());
        if !finite(&self.lambda_a) || !finite(&self.lambda_q) || !finite(&self.lambda_r) {
            return Err(Error::invalid("eigenvalues must be finite"));
        }
        if self.lambda_q.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("Λ_Q must be ≥ 0"));
        }
        if self.lambda_r.iter().any(|&v| v <= 0.0) {
            return Err(Error::invalid("Λ_R must be > 0"));
        }
        self.noise.validate(d)
    }

    /// Same spec with `Λ_A` multiplied by `factor`.
    pub fn scale_dynamics(mut self, factor: f64) -> Self {
        self.lambda_a.iter_mut().for_each(|v| *v *= factor);
        self
    }
}

/// Random instance: `A = VᵀΛ_A V`, `Q`, `R` likewise with independent
/// orthonormal bases, `B` and `z` entrywise `U[0, 1]`.
pub fn generate_problem(spec: &GenerationSpec, seed: u64) -> Result<MpcProblem> {
    spec.validate()?;
    let (d, m) = (spec.state_dim(), spec.control_dim());
    for attempt in 0..64 {
        let mut rng = RandomSource::new(seed, attempt);
        let bases = (
            random_orthonormal(d, &mut rng),
            random_orthonormal(d, &mut rng),
            random_orthonormal(m, &mut rng),
        );
        let (Some(va), Some(vq), Some(vr)) = bases else {
            continue;
        };
        let b = DMatrix::from_fn(d, m, |_, _| rng.uniform());
        let z = DVector::from_fn(d, |_, _| rng.uniform());
        return MpcProblem::new(
            spectral_compose(&va, &spec.lambda_a),
            b,
            spectral_compose(&vq, &spec.lambda_q),
            spectral_compose(&vr, &spec.lambda_r),
            z,
            spec.noise.clone(),
        );
    }
    Err(Error::invalid("could not draw a full-rank basis"))
}

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Euclidean projection onto `{p : p ≥ 0, Σp = 1}` by sorting and thresholding.
pub fn project_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("projection needs a non-empty finite vector"));
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Stable sort: equal entries keep index order.
    order.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cumsum += v[i];
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if v[i] - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(SimplexPoint(v.iter().map(|x| (x - tau).max(0.0)).collect()))
}

/// Finite control set with a strongly convex (`α‖p‖²`) mixed-strategy objective.
#[derive(Clone, Debug)]
pub struct DiscreteControlProblem {
    pub base: MpcProblem,
    pub controls: Vec<DVector<f64>>,
    pub alpha: f64,
    /// SAA samples per cost evaluation.
    pub samples: usize,
    /// Seed of the SAA draws inside `p(x)`, fixed so that `p` is a function of the state.
    pub saa_seed: u64,
}

impl DiscreteControlProblem {
    pub fn validate(&self) -> Result<()> {
        if self.controls.is_empty() {
            return Err(Error::invalid("need at least one control"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("need J ≥ 1 samples"));
        }
        let m = self.base.control_dim();
        if self.controls.iter().any(|u| u.len() != m) {
            return Err(Error::DimensionMismatch(format!("controls must have dimension {m}")));
        }
        Ok(())
    }
}

/// SAA estimates of the one-step cost of each control, all evaluated on the
/// same `J` noise draws.
pub fn expected_costs(dcp: &DiscreteControlProblem, x: &StateVector, rng: &mut RandomSource) -> Result<Vec<f64>> {
    dcp.validate()?;
    check_state_dim(&dcp.base, x)?;
    let p = &dcp.base;
    let draws: Vec<DMatrix<f64>> = (0..dcp.samples).map(|_| p.noise.sample(p.state_dim(), rng)).collect();
    Ok(dcp
        .controls
        .iter()
        .map(|u| {
            let stage: f64 = draws
                .iter()
                .map(|xi| {
                    let e = propagate(&p.a, xi, &p.b, x, u) - &p.z;
                    (e.transpose() * &p.q * &e)[(0, 0)]
                })
                .sum::<f64>()
                / dcp.samples as f64;
            stage + (u.transpose() * &p.r * u)[(0, 0)]
        })
        .collect())
}

/// `argmin_{p ∈ Δ} c·p + α‖p‖² = Π_Δ(−c / 2α)`.
pub fn mixed_strategy_from_costs(costs: &[f64], alpha: f64) -> Result<SimplexPoint> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    let v: Vec<f64> = costs.iter().map(|c| -c / (2.0 * alpha)).collect();
    project_simplex(&v)
}

/// Regularized mixed strategy over the control set at state `x`.
pub fn mixed_strategy(dcp: &DiscreteControlProblem, x: &StateVector, rng: &mut RandomSource) -> Result<SimplexPoint> {
    let costs = expected_costs(dcp, x, rng)?;
    mixed_strategy_from_costs(&costs, dcp.alpha)
}

/// The mixed-strategy controller as a state-dependent IFS: `S_i` applies
/// control `u_i` to the noisy plant and `p(x)` is the mixed strategy.
pub fn discrete_smpc_as_ifs(dcp: &DiscreteControlProblem) -> Result<DiscreteIfs> {
    dcp.validate()?;
    let maps = dcp
        .controls
        .iter()
        .map(|u| {
            let base = dcp.base.clone();
            let u = u.clone();
            IfsMap::random(move |x, rng| {
                let xi = base.noise.sample(base.state_dim(), rng);
                propagate(&base.a, &xi, &base.b, x, &u)
            })
        })
        .collect();
    let dcp = dcp.clone();
    DiscreteIfs::new(maps, move |x| {
        let mut rng = RandomSource::new(dcp.saa_seed, 0);
        match mixed_strategy(&dcp, x, &mut rng) {
            Ok(p) => p.into_vec(),
            Err(_) => vec![f64::NAN; dcp.controls.len()],
        }
    })
}

/// Smooth convex objective for [`projected_gradient`].
pub trait SmoothObjective {
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64>;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
}

/// SAA objective `uᵀ(R + BᵀQB)u + 2uᵀBᵀQ(Āx − z)` (constant terms dropped).
pub struct SaaQuadratic {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    lipschitz: f64,
}

impl SaaQuadratic {
    pub fn new(problem: &MpcProblem, x: &StateVector, noise_mean: &DMatrix<f64>) -> Self {
        let hessian = problem.normal_matrix() * 2.0;
        let residual = (problem.a() + noise_mean) * x.vector() - problem.z();
        let linear = problem.b().transpose() * problem.q() * residual * 2.0;
        let lipschitz = *symmetric_eigenvalues(&hessian).last().expect("non-empty");
        Self {
            hessian,
            linear,
            lipschitz,
        }
    }
}

impl SmoothObjective for SaaQuadratic {
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.hessian * u + &self.linear
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

#[derive(Clone, Debug)]
pub struct GradientSolution {
    pub point: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected gradient with step `1/L`, stopping when `‖uₖ₊₁ − uₖ‖ ≤ 1e-10`
/// or after `10⁵` iterations.
pub fn projected_gradient(
    objective: &dyn SmoothObjective,
    project: impl Fn(DVector<f64>) -> DVector<f64>,
    start: DVector<f64>,
) -> GradientSolution {
    const TOLERANCE: f64 = 1e-10;
    const MAX_ITERATIONS: usize = 100_000;
    let step = 1.0 / objective.lipschitz();
    let mut u = project(start);
    for k in 0..MAX_ITERATIONS {
        let next = project(&u - objective.gradient(&u) * step);
        let moved = (&next - &u).norm();
        u = next;
        if moved <= TOLERANCE {
            return GradientSolution {
                point: u,
                iterations: k + 1,
                converged: true,
            };
        }
    }
    GradientSolution {
        point: u,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}
