#![allow(dead_code)]

use lrbs::DenseMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// Singular values from nalgebra, descending.
pub fn na_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(a).singular_values().iter().copied().collect();
    s.sort_by(|p, q| q.partial_cmp(p).unwrap());
    s
}

pub fn na_nuclear(a: &DenseMatrix) -> f64 {
    na_singular_values(a).iter().sum()
}

/// `log(1 + e^t)` evaluated directly, valid for moderate `t`.
pub fn naive_softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp()
    } else {
        t.exp().ln_1p()
    }
}

/// Pair loss by explicit summation over every `(i, j)` and every entry of `M`.
pub fn scalar_loss(
    x: &DenseMatrix,
    z: &DenseMatrix,
    y: &DenseMatrix,
    w: &DenseMatrix,
    m: &DenseMatrix,
) -> f64 {
    let mut total = 0.0;
    for i in 0..x.cols() {
        for j in 0..z.cols() {
            let mut s = 0.0;
            for a in 0..x.rows() {
                for b in 0..z.rows() {
                    s += x[(a, i)] * m[(a, b)] * z[(b, j)];
                }
            }
            total += w[(i, j)] * naive_softplus(-y[(i, j)] * s);
        }
    }
    total
}

/// Labels `0..classes` repeated so that every class appears on both sides.
pub fn cycling_labels(count: usize, classes: usize) -> Vec<i64> {
    (0..count).map(|i| (i % classes) as i64).collect()
}
