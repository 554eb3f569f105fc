//! Dense matrices, thin SVD and energy-threshold PCA.

mod matrix;
pub mod pca;
pub mod svd;

pub use matrix::DenseMatrix;
pub use pca::{pca_apply, pca_fit, PcaProjection};
pub use svd::{nuclear_norm, singular_values, svd, SvdResult, RANK_TOLERANCE};
