//! Principal component analysis with an explained-energy cutoff.

use super::matrix::DenseMatrix;
use super::svd::svd;
use crate::error::{Error, Result};

/// Centering vector and orthonormal basis of the retained principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// Per-dimension sample mean, length `dim`.
    pub mean: Vec<f64>,
    /// `dim x k`, orthonormal columns ordered by decreasing variance.
    pub basis: DenseMatrix,
    /// Sample-covariance eigenvalues of the retained directions.
    pub eigenvalues: Vec<f64>,
    /// Fraction of the total variance kept by the basis.
    pub retained_energy: f64,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    /// Projects the columns of `x` (`dim x count`) onto the basis.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        pca_apply(self, x)
    }

    /// Maps projected coordinates back into the input space.
    pub fn reconstruct(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.rows() != self.output_dim() {
            return Err(Error::dimension(
                "pca reconstruct",
                format!("{} rows", self.output_dim()),
                format!("{} rows", y.rows()),
            ));
        }
        let mut out = self.basis.matmul(y)?;
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                out[(i, j)] += self.mean[i];
            }
        }
        Ok(out)
    }
}

fn center(x: &DenseMatrix, mean: &[f64]) -> DenseMatrix {
    let mut c = x.clone();
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            c[(i, j)] -= mean[i];
        }
    }
    c
}

/// Fits PCA on `x` (`dim x samples`), keeping the smallest number of
/// components whose eigenvalue mass reaches `energy` of the total.
pub fn pca_fit(x: &DenseMatrix, energy: f64) -> Result<PcaProjection> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "PCA energy must lie in (0, 1], got {energy}"
        )));
    }
    let (dim, count) = x.shape();
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples, got {count}"
        )));
    }
    x.ensure_finite("PCA input")?;

    let mean: Vec<f64> = (0..dim)
        .map(|i| x.row(i).iter().sum::<f64>() / count as f64)
        .collect();
    let centered = center(x, &mean);
    let dec = svd(&centered)?;
    let denom = (count - 1) as f64;
    let eig: Vec<f64> = dec.sigma.iter().map(|s| s * s / denom).collect();
    let total: f64 = eig.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument(
            "PCA input has zero variance".to_string(),
        ));
    }

    let target = energy * total - 1e-12 * total;
    let mut cum = 0.0;
    let mut k = eig.len();
    for (i, e) in eig.iter().enumerate() {
        cum += e;
        if cum >= target {
            k = i + 1;
            break;
        }
    }
    let kept: f64 = eig[..k].iter().sum();

    let mut basis = DenseMatrix::zeros(dim, k);
    for i in 0..dim {
        for j in 0..k {
            basis[(i, j)] = dec.u[(i, j)];
        }
    }
    Ok(PcaProjection {
        mean,
        basis,
        eigenvalues: eig[..k].to_vec(),
        retained_energy: (kept / total).min(1.0),
    })
}

/// `basis^T (x - mean 1^T)`.
pub fn pca_apply(p: &PcaProjection, x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != p.input_dim() {
        return Err(Error::dimension(
            "pca_apply",
            format!("{} feature rows", p.input_dim()),
            format!("{} feature rows", x.rows()),
        ));
    }
    p.basis.t_matmul(&center(x, &p.mean))
}
