//! Proximal operator of the nuclear norm (singular value soft-thresholding)
//! and a checker for its first-order optimality conditions.

use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix};

/// Singular values within this distance above the threshold count as zero.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// Tolerance used by [`check_svt_optimality`].
pub const OPTIMALITY_TOLERANCE: f64 = 1e-6;

/// Result of a soft-thresholding step.
#[derive(Debug, Clone)]
pub struct Shrunk {
    pub matrix: DenseMatrix,
    /// Surviving singular values `sigma_i - gamma > 0`, nonincreasing.
    pub sigma: Vec<f64>,
}

impl Shrunk {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

/// Minimizer of `0.5 ||M - L||_F^2 + gamma ||M||_*`.
pub fn svt(l: &DenseMatrix, gamma: f64) -> Result<DenseMatrix> {
    Ok(svt_with_spectrum(l, gamma)?.matrix)
}

/// [`svt`] that also returns the shrunk spectrum.
pub fn svt_with_spectrum(l: &DenseMatrix, gamma: f64) -> Result<Shrunk> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite and nonnegative, got {gamma}"
        )));
    }
    let dec = svd(l)?;
    let keep = dec
        .sigma
        .iter()
        .take_while(|&&s| s - gamma > BOUNDARY_GUARD)
        .count();
    let mut weights = vec![0.0; dec.rank()];
    for (w, s) in weights.iter_mut().zip(&dec.sigma).take(keep) {
        *w = s - gamma;
    }
    Ok(Shrunk {
        matrix: dec.compose(&weights),
        sigma: weights[..keep].to_vec(),
    })
}

/// Residuals of the subgradient conditions for a candidate minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityReport {
    pub passed: bool,
    /// `||U0^T S||_F`
    pub left_residual: f64,
    /// `||S V0||_F`
    pub right_residual: f64,
    /// `max(0, ||S||_2 - 1)`
    pub spectral_excess: f64,
}

/// Checks `0 ∈ M - L + gamma ∂||M||_*` at `M = candidate`.
///
/// Writes `(L - M) / gamma = U0 V0^T + S` with `U0`, `V0` spanning the column
/// and row spaces of `M`, and tests `U0^T S = 0`, `S V0 = 0`, `||S||_2 <= 1`.
pub fn check_svt_optimality(
    l: &DenseMatrix,
    gamma: f64,
    candidate: &DenseMatrix,
) -> Result<OptimalityReport> {
    if l.shape() != candidate.shape() {
        return Err(Error::dimension(
            "check_svt_optimality",
            format!("{}x{}", l.rows(), l.cols()),
            format!("{}x{}", candidate.rows(), candidate.cols()),
        ));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be positive, got {gamma}"
        )));
    }
    let dec = svd(candidate)?;
    let residual = l.sub(candidate)?.scale(1.0 / gamma);
    let s = residual.sub(&dec.u.matmul_t(&dec.v)?)?;

    let left_residual = dec.u.t_matmul(&s)?.frobenius_norm();
    let right_residual = s.matmul(&dec.v)?.frobenius_norm();
    let spectral_excess = (svd(&s)?.spectral_norm() - 1.0).max(0.0);
    let passed = left_residual <= OPTIMALITY_TOLERANCE
        && right_residual <= OPTIMALITY_TOLERANCE
        && spectral_excess <= OPTIMALITY_TOLERANCE;
    Ok(OptimalityReport {
        passed,
        left_residual,
        right_residual,
        spectral_excess,
    })
}
