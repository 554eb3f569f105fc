//! Synthetic two-modality data with a shared latent class structure.
//!
//! Class centers live in a `k`-dimensional latent space. Each modality sees
//! the latent point through its own fixed random linear map, after adding
//! isotropic Gaussian noise. A bilinear similarity is exactly the right model
//! class for matching such data.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::text::{load_modality, save_modality};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pairs::LabeledModality;

/// File stems written by [`DatasetBundle::save`], in write order.
pub const BUNDLE_PARTS: [&str; 4] = ["train_x", "train_z", "test_x", "test_z"];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub train_x: LabeledModality,
    pub train_z: LabeledModality,
    pub test_x: LabeledModality,
    pub test_z: LabeledModality,
}

impl DatasetBundle {
    fn parts(&self) -> [&LabeledModality; 4] {
        [&self.train_x, &self.train_z, &self.test_x, &self.test_z]
    }

    /// Writes `<part>.csv` and `<part>.labels` for every split.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (stem, part) in BUNDLE_PARTS.iter().zip(self.parts()) {
            save_modality(
                &dir.join(format!("{stem}.csv")),
                &dir.join(format!("{stem}.labels")),
                part,
            )?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let load = |stem: &str| {
            load_modality(
                &dir.join(format!("{stem}.csv")),
                &dir.join(format!("{stem}.labels")),
            )
        };
        let bundle = Self {
            name: dir
                .file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            train_x: load("train_x")?,
            train_z: load("train_z")?,
            test_x: load("test_x")?,
            test_z: load("test_z")?,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Feature dimensions agree across splits within each modality.
    pub fn validate(&self) -> Result<()> {
        if self.train_x.dim() != self.test_x.dim() {
            return Err(Error::dimension(
                "x modality splits",
                self.train_x.dim(),
                self.test_x.dim(),
            ));
        }
        if self.train_z.dim() != self.test_z.dim() {
            return Err(Error::dimension(
                "z modality splits",
                self.train_z.dim(),
                self.test_z.dim(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub latent_dim: usize,
    pub dim_x: usize,
    pub dim_z: usize,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The fixed benchmark: 5 classes, 4 latent dims, 30/20 feature dims,
    /// 20 train and 10 test samples per class, noise 0.3, seed 42.
    pub fn benchmark() -> Self {
        Self {
            classes: 5,
            latent_dim: 4,
            dim_x: 30,
            dim_z: 20,
            per_class_train: 20,
            per_class_test: 10,
            noise_sigma: 0.3,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("classes", self.classes),
            ("latent_dim", self.latent_dim),
            ("dim_x", self.dim_x),
            ("dim_z", self.dim_z),
            ("per_class_train", self.per_class_train),
            ("per_class_test", self.per_class_test),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be finite and nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("sized buffer")
}

/// Draws `per_class * classes` samples with labels cycling through the
/// classes (sample `i` has class `i mod classes`).
fn draw_split(
    map: &DenseMatrix,
    centers: &DenseMatrix,
    per_class: usize,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> LabeledModality {
    let (classes, k) = centers.shape();
    let count = classes * per_class;
    let mut features = DenseMatrix::zeros(map.rows(), count);
    let mut labels = Vec::with_capacity(count);
    let mut latent = vec![0.0; k];
    for s in 0..count {
        let class = s % classes;
        for (a, &c) in latent.iter_mut().zip(centers.row(class)) {
            let eps: f64 = StandardNormal.sample(rng);
            *a = c + sigma * eps;
        }
        for i in 0..map.rows() {
            features[(i, s)] = map.row(i).iter().zip(&latent).map(|(m, l)| m * l).sum();
        }
        labels.push(class as i64);
    }
    LabeledModality::new(features, labels).expect("consistent split")
}

/// Deterministic function of `spec`, including its seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = normal_matrix(spec.classes, spec.latent_dim, &mut rng);
    let map_x = normal_matrix(spec.dim_x, spec.latent_dim, &mut rng);
    let map_z = normal_matrix(spec.dim_z, spec.latent_dim, &mut rng);
    let s = spec.noise_sigma;
    let train_x = draw_split(&map_x, &centers, spec.per_class_train, s, &mut rng);
    let train_z = draw_split(&map_z, &centers, spec.per_class_train, s, &mut rng);
    let test_x = draw_split(&map_x, &centers, spec.per_class_test, s, &mut rng);
    let test_z = draw_split(&map_z, &centers, spec.per_class_test, s, &mut rng);
    Ok(DatasetBundle {
        name: format!(
            "synthetic-c{}-k{}-x{}-z{}-seed{}",
            spec.classes, spec.latent_dim, spec.dim_x, spec.dim_z, spec.seed
        ),
        train_x,
        train_z,
        test_x,
        test_z,
    })
}
