//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix with plane
//! rotations; on convergence the column norms are the singular values. Column
//! pairs are rotated until each pair is orthogonal relative to the product of
//! their norms, which keeps the left singular vectors orthonormal even for
//! small singular values.

use super::matrix::{dot, DenseMatrix};
use crate::error::Result;

/// Singular values at or below `RANK_TOLERANCE * sigma_max` are dropped.
pub const RANK_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Thin SVD `a = u * diag(sigma) * v^T` keeping the `r` numerically nonzero
/// singular values.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative, length `r`.
    pub sigma: Vec<f64>,
    /// `cols x r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Sum of the singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// Largest singular value, or zero for the zero matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// `u * diag(weights) * v^T`; `weights` must have length `r`.
    pub fn compose(&self, weights: &[f64]) -> DenseMatrix {
        debug_assert_eq!(weights.len(), self.rank());
        let (rows, cols) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(rows, cols);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..rows {
                let a = w * self.u[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..cols {
                    out[(i, j)] += a * self.v[(j, k)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.compose(&self.sigma)
    }
}

/// Computes the thin SVD of `a`.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    a.ensure_finite("svd input")?;
    if a.rows() >= a.cols() {
        Ok(jacobi_tall(a))
    } else {
        let t = jacobi_tall(&a.transpose());
        Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// Singular values of `a` (nonincreasing, truncated at the rank tolerance).
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.sigma)
}

/// Sum of singular values of `a`.
pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.nuclear_norm())
}

/// Requires `a.rows() >= a.cols()`.
fn jacobi_tall(a: &DenseMatrix) -> SvdResult {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (m.max(1) as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let smax = order.first().map_or(0.0, |&i| norms[i]);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| norms[i] > 0.0 && norms[i] > RANK_TOLERANCE * smax)
        .collect();

    let r = kept.len();
    let mut u = DenseMatrix::zeros(m, r);
    let mut v = DenseMatrix::zeros(n, r);
    let mut sigma = Vec::with_capacity(r);
    for (k, &j) in kept.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        for i in 0..m {
            u[(i, k)] = cols[j][i] / s;
        }
        for i in 0..n {
            v[(i, k)] = vcols[j][i];
        }
    }
    SvdResult { u, sigma, v }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let g = q.t_matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs()
    }

    fn check_invariants(a: &DenseMatrix, s: &SvdResult) {
        assert!(orthonormality_error(&s.u) < 1e-8);
        assert!(orthonormality_error(&s.v) < 1e-8);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.sigma.iter().all(|&x| x >= 0.0));
        let rel = s.reconstruct().sub(a).unwrap().frobenius_norm() / a.frobenius_norm().max(1e-300);
        assert!(rel < 1e-8, "reconstruction error {rel}");
    }

    #[test]
    fn identity_two_by_two() {
        let s = svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(s.sigma.len(), 2);
        assert!((s.sigma[0] - 1.0).abs() < 1e-15 && (s.sigma[1] - 1.0).abs() < 1e-15);
        let uvt = s.u.matmul_t(&s.v).unwrap();
        assert!(uvt.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_singular_values_are_absolute_entries() {
        let s = svd(&DenseMatrix::from_diag(&[1.0, -3.0])).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-14);
        assert!((s.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_six_by_four_reconstructs() {
        let a = random(6, 4, 11);
        let s = svd(&a).unwrap();
        assert_eq!(s.rank(), 4);
        check_invariants(&a, &s);
    }

    #[test]
    fn wide_matrices_handled_by_transpose() {
        let a = random(3, 7, 5);
        let s = svd(&a).unwrap();
        assert_eq!((s.u.rows(), s.v.rows()), (3, 7));
        check_invariants(&a, &s);
    }

    #[test]
    fn rank_deficient_input_is_truncated() {
        let a = DenseMatrix::outer(&[1.0, 2.0, 3.0, 4.0], &[1.0, -1.0, 0.5]);
        let s = svd(&a).unwrap();
        assert_eq!(s.rank(), 1);
        check_invariants(&a, &s);
    }

    #[test]
    fn zero_matrix_has_empty_spectrum() {
        let s = svd(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(s.rank(), 0);
        assert_eq!(s.reconstruct(), DenseMatrix::zeros(3, 2));
        assert_eq!(s.nuclear_norm(), 0.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn svd_of_reconstruction_is_stable() {
        let a = random(5, 5, 3);
        let s1 = svd(&a).unwrap();
        let s2 = svd(&s1.reconstruct()).unwrap();
        for (x, y) in s1.sigma.iter().zip(&s2.sigma) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
