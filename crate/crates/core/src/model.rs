use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, PcaProjection};

/// Learned bilinear similarity `S(x, z) = x^T M z`, with the optional PCA
/// projections that map raw features into the space `M` was trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    pub m: DenseMatrix,
    pub pca_x: Option<PcaProjection>,
    pub pca_z: Option<PcaProjection>,
    pub lambda: f64,
    pub metadata: BTreeMap<String, String>,
}

impl SimilarityModel {
    pub fn new(m: DenseMatrix, lambda: f64) -> Self {
        Self {
            m,
            pca_x: None,
            pca_z: None,
            lambda,
            metadata: BTreeMap::new(),
        }
    }

    /// Raw feature dimensions `(x, z)` accepted by [`SimilarityModel::score`].
    pub fn input_dims(&self) -> (usize, usize) {
        (
            self.pca_x.as_ref().map_or(self.m.rows(), |p| p.input_dim()),
            self.pca_z.as_ref().map_or(self.m.cols(), |p| p.input_dim()),
        )
    }

    /// Checks that the projections feed `M` with matching dimensions.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.pca_x {
            if p.output_dim() != self.m.rows() {
                return Err(Error::dimension(
                    "model x projection",
                    format!("{} components", self.m.rows()),
                    p.output_dim(),
                ));
            }
        }
        if let Some(p) = &self.pca_z {
            if p.output_dim() != self.m.cols() {
                return Err(Error::dimension(
                    "model z projection",
                    format!("{} components", self.m.cols()),
                    p.output_dim(),
                ));
            }
        }
        Ok(())
    }

    /// Raw `x` features (`dim x count`) mapped into the model space.
    pub fn project_x(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        project(self.pca_x.as_ref(), x, self.m.rows(), "x features")
    }

    /// Raw `z` features (`dim x count`) mapped into the model space.
    pub fn project_z(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        project(self.pca_z.as_ref(), z, self.m.cols(), "z features")
    }

    /// Bilinear scores `X^T M Z` for raw features, `x_count x z_count`.
    pub fn score(&self, x: &DenseMatrix, z: &DenseMatrix) -> Result<DenseMatrix> {
        let px = self.project_x(x)?;
        let pz = self.project_z(z)?;
        px.t_matmul(&self.m)?.matmul(&pz)
    }
}

fn project(
    p: Option<&PcaProjection>,
    raw: &DenseMatrix,
    model_dim: usize,
    context: &'static str,
) -> Result<DenseMatrix> {
    match p {
        Some(p) => p
            .apply(raw)
            .map_err(|_| Error::dimension(context, format!("{} rows", p.input_dim()), raw.rows())),
        None if raw.rows() == model_dim => Ok(raw.clone()),
        None => Err(Error::dimension(
            context,
            format!("{model_dim} rows"),
            raw.rows(),
        )),
    }
}
