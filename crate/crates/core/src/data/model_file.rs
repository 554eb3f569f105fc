//! Binary model container.
//!
//! All integers are `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! "LRBS1"                       5-byte magic
//! rows, cols                    shape of M
//! lambda
//! M                             rows * cols entries, row-major
//! pca_x block, pca_z block      see below
//! n_meta                        then n_meta (key, value) string pairs
//! ```
//!
//! A PCA block is a flag byte (0 = absent, 1 = present) followed, when
//! present, by `dim, k, retained_energy`, the `dim` mean entries, the `k`
//! eigenvalues and the `dim x k` basis row-major. Strings are a length
//! followed by UTF-8 bytes. Nothing may follow the metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::text::write_file;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, PcaProjection};
use crate::model::SimilarityModel;

pub const MAGIC: &[u8; 5] = b"LRBS1";

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn pca(&mut self, p: Option<&PcaProjection>) {
        match p {
            None => self.0.push(0),
            Some(p) => {
                self.0.push(1);
                self.u64(p.input_dim());
                self.u64(p.output_dim());
                self.f64(p.retained_energy);
                self.f64s(&p.mean);
                self.f64s(&p.eigenvalues);
                self.f64s(p.basis.as_slice());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadModelFile(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| bad(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let b = self.take(8, what)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| bad(format!("{what} out of range")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| bad(format!("{what} length overflows")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<DenseMatrix> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| bad(format!("{what} shape overflows")))?;
        let data = self.f64s(n, what)?;
        DenseMatrix::from_vec_finite(rows, cols, data)
            .map_err(|_| bad(format!("{what} has non-finite entries")))
    }

    fn str(&mut self, what: &str) -> Result<String> {
        let n = self.u64(what)?;
        let raw = self.take(n, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| bad(format!("{what} is not UTF-8")))
    }

    fn pca(&mut self, what: &str) -> Result<Option<PcaProjection>> {
        match self.u8(what)? {
            0 => Ok(None),
            1 => {
                let dim = self.u64(what)?;
                let k = self.u64(what)?;
                let retained_energy = self.f64(what)?;
                let mean = self.f64s(dim, what)?;
                let eigenvalues = self.f64s(k, what)?;
                let basis = self.matrix(dim, k, what)?;
                if k > dim {
                    return Err(bad(format!(
                        "{what}: {k} components exceed dimension {dim}"
                    )));
                }
                Ok(Some(PcaProjection {
                    mean,
                    basis,
                    eigenvalues,
                    retained_energy,
                }))
            }
            flag => Err(bad(format!("{what}: invalid presence flag {flag}"))),
        }
    }
}

/// Serializes a model into the container format.
pub fn encode_model(model: &SimilarityModel) -> Vec<u8> {
    let mut w = Writer(MAGIC.to_vec());
    w.u64(model.m.rows());
    w.u64(model.m.cols());
    w.f64(model.lambda);
    w.f64s(model.m.as_slice());
    w.pca(model.pca_x.as_ref());
    w.pca(model.pca_z.as_ref());
    w.u64(model.metadata.len());
    for (k, v) in &model.metadata {
        w.str(k);
        w.str(v);
    }
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<SimilarityModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("missing LRBS1 magic"));
    }
    let mut r = Reader {
        buf: bytes,
        pos: MAGIC.len(),
    };
    let rows = r.u64("matrix rows")?;
    let cols = r.u64("matrix cols")?;
    let lambda = r.f64("lambda")?;
    let m = r.matrix(rows, cols, "bilinear matrix")?;
    let pca_x = r.pca("x projection")?;
    let pca_z = r.pca("z projection")?;
    let n_meta = r.u64("metadata count")?;
    let mut metadata = BTreeMap::new();
    for _ in 0..n_meta {
        let k = r.str("metadata key")?;
        let v = r.str("metadata value")?;
        metadata.insert(k, v);
    }
    if r.pos != bytes.len() {
        return Err(bad(format!(
            "{} trailing bytes after metadata",
            bytes.len() - r.pos
        )));
    }
    let model = SimilarityModel {
        m,
        pca_x,
        pca_z,
        lambda,
        metadata,
    };
    model
        .validate()
        .map_err(|e| bad(format!("inconsistent dimensions: {e}")))?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &SimilarityModel) -> Result<()> {
    model.validate()?;
    write_file(path, &encode_model(model))
}

pub fn load_model(path: &Path) -> Result<SimilarityModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
