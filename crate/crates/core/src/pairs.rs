//! Must-link / cannot-link supervision over every cross-modal pair.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Features of one modality (`dim x count`) with one class label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledModality {
    features: DenseMatrix,
    labels: Vec<i64>,
}

impl LabeledModality {
    pub fn new(features: DenseMatrix, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != features.cols() {
            return Err(Error::dimension(
                "LabeledModality",
                format!("{} labels (one per feature column)", features.cols()),
                format!("{} labels", labels.len()),
            ));
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument(
                "a modality needs at least one sample".to_string(),
            ));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.features.rows()
    }

    pub fn count(&self) -> usize {
        self.features.cols()
    }

    /// Same labels, features replaced (e.g. after a PCA projection).
    pub fn with_features(&self, features: DenseMatrix) -> Result<Self> {
        Self::new(features, self.labels.clone())
    }

    pub fn into_parts(self) -> (DenseMatrix, Vec<i64>) {
        (self.features, self.labels)
    }
}

/// Sign matrix `y` and pair weights `w`, both `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSupervision {
    pub y: DenseMatrix,
    pub w: DenseMatrix,
    pub positives: usize,
    pub negatives: usize,
}

impl PairSupervision {
    /// Supervision from explicit signs and weights.
    ///
    /// Unlike [`build_supervision`], one-sided supervision is accepted here;
    /// only the sign alphabet, weight sign and shapes are checked.
    pub fn new(y: DenseMatrix, w: DenseMatrix) -> Result<Self> {
        if y.shape() != w.shape() {
            return Err(Error::dimension(
                "PairSupervision",
                format!("{}x{} weights", y.rows(), y.cols()),
                format!("{}x{} weights", w.rows(), w.cols()),
            ));
        }
        if y.as_slice().iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidArgument(
                "pair signs must be +1 or -1".to_string(),
            ));
        }
        if w.as_slice().iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "pair weights must be finite and nonnegative".to_string(),
            ));
        }
        let positives = y.as_slice().iter().filter(|&&s| s > 0.0).count();
        let negatives = y.as_slice().len() - positives;
        Ok(Self {
            y,
            w,
            positives,
            negatives,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }
}

/// Signs from label agreement; each side's weights are the reciprocal of its
/// pair count so that positives and negatives each carry unit mass.
pub fn build_supervision(a: &LabeledModality, b: &LabeledModality) -> Result<PairSupervision> {
    supervision_from_labels(a.labels(), b.labels())
}

pub fn supervision_from_labels(a: &[i64], b: &[i64]) -> Result<PairSupervision> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "supervision needs nonempty label sets".to_string(),
        ));
    }
    let (m, n) = (a.len(), b.len());
    let mut y = DenseMatrix::zeros(m, n);
    let mut positives = 0;
    for (i, la) in a.iter().enumerate() {
        for (j, lb) in b.iter().enumerate() {
            if la == lb {
                y[(i, j)] = 1.0;
                positives += 1;
            } else {
                y[(i, j)] = -1.0;
            }
        }
    }
    let negatives = m * n - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateSupervision {
            positives,
            negatives,
        });
    }
    let (wp, wn) = (1.0 / positives as f64, 1.0 / negatives as f64);
    let w = y.map(|s| if s > 0.0 { wp } else { wn });
    Ok(PairSupervision {
        y,
        w,
        positives,
        negatives,
    })
}
