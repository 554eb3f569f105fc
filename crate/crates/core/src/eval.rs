//! Cross-modal retrieval scoring and ranking metrics: average precision,
//! MAP, interpolated precision-recall and precision-scope curves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::SimilarityModel;

/// Number of points on the recall grid `0.05, 0.10, ..., 1.00`.
pub const RECALL_GRID_POINTS: usize = 20;

/// Which modality supplies the queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `x` samples query a gallery of `z` samples.
    XQueriesZ,
    /// `z` samples query a gallery of `x` samples.
    ZQueriesX,
}

impl Direction {
    pub fn key(self) -> &'static str {
        match self {
            Direction::XQueriesZ => "x_query",
            Direction::ZQueriesX => "z_query",
        }
    }
}

/// Similarity of every query (rows) against every gallery item (columns).
///
/// Entry `(i, j)` is always `x^T M z` for the `x`/`z` sample involved, so
/// the two directions produce transposed matrices of the same scores.
pub fn score_all(
    model: &SimilarityModel,
    queries: &DenseMatrix,
    gallery: &DenseMatrix,
    direction: Direction,
) -> Result<DenseMatrix> {
    match direction {
        Direction::XQueriesZ => model.score(queries, gallery),
        Direction::ZQueriesX => {
            let px = model.project_x(gallery)?;
            let pz = model.project_z(queries)?;
            pz.t_matmul(&model.m.transpose())?.matmul(&px)
        }
    }
}

/// Gallery ranking for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRetrieval {
    pub query_index: usize,
    /// Gallery indices by descending score; ties by ascending index.
    pub ranked_gallery: Vec<usize>,
    /// Whether the item at each ranked position shares the query's label.
    pub relevance: Vec<bool>,
}

impl RankedRetrieval {
    pub fn from_scores(
        query_index: usize,
        scores: &[f64],
        query_label: i64,
        gallery_labels: &[i64],
    ) -> Result<Self> {
        if scores.len() != gallery_labels.len() {
            return Err(Error::dimension(
                "ranking",
                format!("{} gallery labels", scores.len()),
                gallery_labels.len(),
            ));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("retrieval scores"));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let relevance = order
            .iter()
            .map(|&j| gallery_labels[j] == query_label)
            .collect();
        Ok(Self {
            query_index,
            ranked_gallery: order,
            relevance,
        })
    }

    pub fn relevant_count(&self) -> usize {
        self.relevance.iter().filter(|&&r| r).count()
    }
}

/// Ranks the gallery for every row of `scores`.
pub fn rank_all(
    scores: &DenseMatrix,
    query_labels: &[i64],
    gallery_labels: &[i64],
) -> Result<Vec<RankedRetrieval>> {
    if scores.rows() != query_labels.len() {
        return Err(Error::dimension(
            "rank_all",
            format!("{} query labels", scores.rows()),
            query_labels.len(),
        ));
    }
    query_labels
        .iter()
        .enumerate()
        .map(|(i, &l)| RankedRetrieval::from_scores(i, scores.row(i), l, gallery_labels))
        .collect()
}

/// `(1/T) sum_r P(r) rel(r)` over the whole ranked list; 0 when `T = 0`.
///
/// The precision sum is accumulated as an exact fraction while it fits in
/// `i128`, so short lists get a correctly rounded result; longer lists
/// continue in floating point.
pub fn average_precision(relevance: &[bool]) -> f64 {
    let mut hits: i128 = 0;
    // exact part num/den, plus a floating tail once the fraction overflows
    let (mut num, mut den): (i128, i128) = (0, 1);
    let mut tail = 0.0;
    let mut exact = true;
    for (r, &rel) in relevance.iter().enumerate() {
        if !rel {
            continue;
        }
        hits += 1;
        let rank = (r + 1) as i128;
        if exact {
            let next = num
                .checked_mul(rank)
                .zip(hits.checked_mul(den))
                .and_then(|(a, b)| a.checked_add(b))
                .zip(den.checked_mul(rank));
            if let Some((n, d)) = next {
                let g = gcd(n, d);
                (num, den) = (n / g, d / g);
                continue;
            }
            exact = false;
        }
        tail += hits as f64 / rank as f64;
    }
    if hits == 0 {
        return 0.0;
    }
    match den.checked_mul(hits) {
        Some(d) if exact => num as f64 / d as f64,
        _ => (num as f64 / den as f64 + tail) / hits as f64,
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs().max(1)
}

pub fn mean_average_precision(retrievals: &[RankedRetrieval]) -> Result<f64> {
    if retrievals.is_empty() {
        return Err(Error::InvalidArgument(
            "MAP needs at least one query".to_string(),
        ));
    }
    let sum: f64 = retrievals
        .iter()
        .map(|r| average_precision(&r.relevance))
        .sum();
    Ok(sum / retrievals.len() as f64)
}

/// Interpolated precision at recall `k / 20` for `k = 1..=20`.
fn interpolated_precision(relevance: &[bool]) -> [f64; RECALL_GRID_POINTS] {
    let total = relevance.iter().filter(|&&r| r).count();
    let mut out = [0.0; RECALL_GRID_POINTS];
    if total == 0 {
        return out;
    }
    let mut hits = Vec::with_capacity(relevance.len());
    let mut h = 0usize;
    for &rel in relevance {
        h += rel as usize;
        hits.push(h);
    }
    // best precision at rank >= r
    let mut suffix_max = vec![0.0f64; relevance.len() + 1];
    for r in (0..relevance.len()).rev() {
        suffix_max[r] = suffix_max[r + 1].max(hits[r] as f64 / (r + 1) as f64);
    }
    let mut r = 0;
    for (k, slot) in out.iter_mut().enumerate() {
        let level = k + 1;
        // first rank whose recall hits/T reaches level/20
        while hits[r] * RECALL_GRID_POINTS < level * total {
            r += 1;
        }
        *slot = suffix_max[r];
    }
    out
}

/// Mean interpolated precision on the recall grid, as `(recall, precision)`.
pub fn precision_recall_curve(retrievals: &[RankedRetrieval]) -> Result<Vec<(f64, f64)>> {
    if retrievals.is_empty() {
        return Err(Error::InvalidArgument(
            "precision-recall curve needs at least one query".to_string(),
        ));
    }
    let mut acc = [0.0; RECALL_GRID_POINTS];
    for r in retrievals {
        for (a, p) in acc.iter_mut().zip(interpolated_precision(&r.relevance)) {
            *a += p;
        }
    }
    let n = retrievals.len() as f64;
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, a)| ((k + 1) as f64 / RECALL_GRID_POINTS as f64, a / n))
        .collect())
}

/// Mean precision of the top `r` items for each requested scope `r`.
pub fn precision_scope_curve(
    retrievals: &[RankedRetrieval],
    scopes: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if retrievals.is_empty() {
        return Err(Error::InvalidArgument(
            "precision-scope curve needs at least one query".to_string(),
        ));
    }
    let gallery = retrievals
        .iter()
        .map(|r| r.relevance.len())
        .min()
        .unwrap_or(0);
    if let Some(&bad) = scopes.iter().find(|&&s| s == 0 || s > gallery) {
        return Err(Error::InvalidArgument(format!(
            "scope {bad} outside 1..={gallery}"
        )));
    }
    let n = retrievals.len() as f64;
    Ok(scopes
        .iter()
        .map(|&s| {
            let sum: f64 = retrievals
                .iter()
                .map(|r| r.relevance[..s].iter().filter(|&&x| x).count() as f64 / s as f64)
                .sum();
            (s, sum / n)
        })
        .collect())
}

/// Scopes `10, 20, ...` up to and including the gallery size.
pub fn default_scopes(gallery_size: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (1..)
        .map(|k| 10 * k)
        .take_while(|&r| r < gallery_size)
        .collect();
    if gallery_size > 0 {
        s.push(gallery_size);
    }
    s
}

/// Summary of one retrieval direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub map: f64,
    pub per_query_ap: Vec<f64>,
    /// `(recall, precision)` pairs.
    pub pr_curve: Vec<(f64, f64)>,
    /// `(scope, precision)` pairs.
    pub scope_curve: Vec<(usize, f64)>,
}

impl MetricReport {
    pub fn from_retrievals(retrievals: &[RankedRetrieval], scopes: &[usize]) -> Result<Self> {
        let map = mean_average_precision(retrievals)?;
        Ok(Self {
            map,
            per_query_ap: retrievals
                .iter()
                .map(|r| average_precision(&r.relevance))
                .collect(),
            pr_curve: precision_recall_curve(retrievals)?,
            scope_curve: precision_scope_curve(retrievals, scopes)?,
        })
    }

    pub fn write_pr_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "recall,precision")?;
        for (r, p) in &self.pr_curve {
            writeln!(out, "{r},{p}")?;
        }
        Ok(())
    }

    pub fn write_scope_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scope,precision")?;
        for (s, p) in &self.scope_curve {
            writeln!(out, "{s},{p}")?;
        }
        Ok(())
    }
}

/// Scores, ranks and summarizes one retrieval direction.
pub fn evaluate(
    model: &SimilarityModel,
    queries: (&DenseMatrix, &[i64]),
    gallery: (&DenseMatrix, &[i64]),
    direction: Direction,
    scopes: Option<&[usize]>,
) -> Result<MetricReport> {
    let scores = score_all(model, queries.0, gallery.0, direction)?;
    let retrievals = rank_all(&scores, queries.1, gallery.1)?;
    let defaults;
    let scopes = match scopes {
        Some(s) => s,
        None => {
            defaults = default_scopes(gallery.1.len());
            &defaults
        }
    };
    MetricReport::from_retrievals(&retrievals, scopes)
}
