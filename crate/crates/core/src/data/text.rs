//! Feature CSV and label file I/O.
//!
//! Feature files hold one sample per row, comma separated, no header. Label
//! files hold one base-10 integer per line. In memory a modality is stored
//! `dim x count`, so file row `i` becomes column `i`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pairs::LabeledModality;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a feature CSV into a `dim x count` matrix.
pub fn read_features(path: &Path) -> Result<DenseMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut width = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => parse_err(path, line, format!("{other:?}")),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                path,
                line,
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(expected);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    path,
                    line,
                    format!("column {}: not a number: {cell:?}", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("column {}: non-finite value {cell:?}", col + 1),
                ));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no samples"));
    }
    Ok(DenseMatrix::from_rows(&rows)?.transpose())
}

/// Reads one integer label per line.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let t = line.trim();
            t.parse::<i64>()
                .map_err(|_| parse_err(path, i + 1, format!("not an integer label: {t:?}")))
        })
        .collect()
}

/// Loads features and labels, checking that the sample counts agree.
pub fn load_modality(features_path: &Path, labels_path: &Path) -> Result<LabeledModality> {
    let features = read_features(features_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != features.cols() {
        return Err(Error::InvalidArgument(format!(
            "{} has {} labels but {} has {} samples",
            labels_path.display(),
            labels.len(),
            features_path.display(),
            features.cols()
        )));
    }
    LabeledModality::new(features, labels)
}

/// Writes a `dim x count` matrix as one CSV row per sample, 17 significant
/// digits per value.
pub fn write_features(path: &Path, features: &DenseMatrix) -> Result<()> {
    let mut out = String::new();
    for j in 0..features.cols() {
        for i in 0..features.rows() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", features[(i, j)]));
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn save_modality(features_path: &Path, labels_path: &Path, m: &LabeledModality) -> Result<()> {
    write_features(features_path, m.features())?;
    write_labels(labels_path, m.labels())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
