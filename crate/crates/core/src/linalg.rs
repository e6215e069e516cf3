//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::rng::RandomSource;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// Spectral norm (largest singular value) by power iteration on `MᵀM`.
///
/// Iterates until the Rayleigh quotient changes by less than `1e-10`
/// relative, or `10⁴` iterations.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    // Start from the heaviest column of MᵀM; it is zero only when M is.
    let (best, norm) = (0..gram.ncols())
        .map(|j| (j, gram.column(j).norm()))
        .fold((0, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
    if norm == 0.0 {
        return 0.0;
    }
    let mut v: DVector<f64> = gram.column(best) / norm;
    let mut lambda = (m * &v).norm_squared();
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = &gram * &v;
        let wn = w.norm();
        if wn == 0.0 {
            break;
        }
        v = w / wn;
        let next = (m * &v).norm_squared();
        let converged = (next - lambda).abs() <= POWER_TOLERANCE * next;
        lambda = next;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Condition number of a symmetric matrix; infinite when not positive definite.
pub fn spd_condition_number(m: &DMatrix<f64>) -> f64 {
    let ev = symmetric_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * m.amax().max(1.0)
}

/// Orthonormal basis from QR of a standard-Gaussian matrix. Returns `None`
/// on a (probability zero) rank-deficient draw.
pub fn random_orthonormal(n: usize, rng: &mut RandomSource) -> Option<DMatrix<f64>> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.standard_normal());
    let qr = g.qr();
    let r = qr.r();
    if (0..n).any(|i| r[(i, i)].abs() < 1e-10) {
        return None;
    }
    Some(qr.q())
}

/// `Vᵀ diag(λ) V`, symmetrized to remove rounding asymmetry.
pub fn spectral_compose(basis: &DMatrix<f64>, eigenvalues: &[f64]) -> DMatrix<f64> {
    let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
    let m = basis.transpose() * lambda * basis;
    (&m + m.transpose()) * 0.5
}
