//! Dataset files, synthetic data generation and model persistence.

pub mod model_file;
pub mod synthetic;
pub mod text;

pub use model_file::{decode_model, encode_model, load_model, save_model, MAGIC};
pub use synthetic::{generate_synthetic, DatasetBundle, SyntheticSpec, BUNDLE_PARTS};
pub use text::{
    load_modality, read_features, read_labels, save_modality, write_features, write_labels,
};
