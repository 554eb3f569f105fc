//! Low-rank bilinear similarity learning between two feature modalities.
//!
//! A similarity `S(x, z) = x^T M z` is learned from class-labeled samples of
//! two modalities with different feature dimensions. `M` minimizes a
//! weighted logistic loss over all cross-modal pairs plus a nuclear-norm
//! penalty, solved by accelerated proximal gradient descent with singular
//! value thresholding. The [`eval`] module scores cross-modal retrieval with
//! MAP, precision-recall and precision-scope curves.

pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod loss;
mod model;
pub mod optimizer;
pub mod pairs;
pub mod prox;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, PcaProjection, SvdResult};
pub use model::SimilarityModel;
pub use optimizer::{train, train_supervised, train_with_pca, TrainConfig, TrainTrace};
pub use pairs::{build_supervision, LabeledModality, PairSupervision};
