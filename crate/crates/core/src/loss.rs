//! Weighted logistic pair loss over bilinear scores and its matrix gradient.

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, DenseMatrix};
use crate::pairs::PairSupervision;

/// `log(1 + exp(t))` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(t))` without overflow.
#[inline]
pub fn logistic_tail(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Training data and pair supervision for one loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossContext<'a> {
    x: &'a DenseMatrix,
    z: &'a DenseMatrix,
    sup: &'a PairSupervision,
}

impl<'a> LossContext<'a> {
    /// `x` is `d1 x m`, `z` is `d2 x n`, supervision is `m x n`.
    pub fn new(x: &'a DenseMatrix, z: &'a DenseMatrix, sup: &'a PairSupervision) -> Result<Self> {
        let (m, n) = sup.shape();
        if x.cols() != m || z.cols() != n {
            return Err(Error::dimension(
                "LossContext",
                format!("{m} x-samples and {n} z-samples"),
                format!("{} and {}", x.cols(), z.cols()),
            ));
        }
        Ok(Self { x, z, sup })
    }

    pub fn x(&self) -> &DenseMatrix {
        self.x
    }

    pub fn z(&self) -> &DenseMatrix {
        self.z
    }

    pub fn supervision(&self) -> &PairSupervision {
        self.sup
    }

    /// Shape of the bilinear matrix, `d1 x d2`.
    pub fn model_shape(&self) -> (usize, usize) {
        (self.x.rows(), self.z.rows())
    }

    fn check_model(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.model_shape() {
            let (d1, d2) = self.model_shape();
            return Err(Error::dimension(
                "bilinear matrix",
                format!("{d1}x{d2}"),
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        Ok(())
    }

    /// Score matrix `X^T M Z` (`m x n`).
    pub fn scores(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_model(m)?;
        self.x.t_matmul(m)?.matmul(self.z)
    }

    /// Smooth part `l(M) = sum w_ij softplus(-y_ij x_i^T M z_j)`.
    pub fn objective_smooth(&self, m: &DenseMatrix) -> Result<f64> {
        let s = self.scores(m)?;
        Ok(self.loss_from_scores(&s))
    }

    /// `l(M) + lambda * ||M||_*`.
    pub fn objective_full(&self, m: &DenseMatrix, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        let smooth = self.objective_smooth(m)?;
        let reg = if lambda == 0.0 {
            0.0
        } else {
            lambda * nuclear_norm(m)?
        };
        Ok(smooth + reg)
    }

    /// Gradient of the smooth part, `-X T Z^T` with
    /// `T_ij = w_ij y_ij / (1 + exp(y_ij x_i^T Q z_j))`.
    pub fn gradient_smooth(&self, q: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.value_and_gradient(q)?.1)
    }

    /// Smooth loss and gradient sharing one score evaluation.
    pub fn value_and_gradient(&self, q: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
        let s = self.scores(q)?;
        let value = self.loss_from_scores(&s);
        let (y, w) = (self.sup.y.as_slice(), self.sup.w.as_slice());
        let t: Vec<f64> = s
            .as_slice()
            .iter()
            .zip(y.iter().zip(w))
            .map(|(&sc, (&yy, &ww))| -ww * yy * logistic_tail(yy * sc))
            .collect();
        let t = DenseMatrix::from_vec(s.rows(), s.cols(), t)?;
        let grad = self.x.matmul(&t)?.matmul_t(self.z)?;
        Ok((value, grad))
    }

    fn loss_from_scores(&self, s: &DenseMatrix) -> f64 {
        s.as_slice()
            .iter()
            .zip(self.sup.y.as_slice().iter().zip(self.sup.w.as_slice()))
            .map(|(&sc, (&y, &w))| if w == 0.0 { 0.0 } else { w * softplus(-y * sc) })
            .sum()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )))
    }
}
