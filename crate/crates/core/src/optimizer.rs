//! Accelerated proximal gradient descent for the nuclear-norm regularized
//! logistic pair loss.
//!
//! Each iteration takes a gradient step on the smooth loss from the search
//! point `Q_t`, soft-thresholds the singular values of the result (the prox of
//! `lambda * eta * ||.||_*`), and extrapolates the next search point from the
//! last two iterates:
//!
//! ```text
//! M_{t+1} = svt(Q_t - eta_t * grad l(Q_t), lambda * eta_t)
//! Q_{t+1} = M_{t+1} + ((alpha_t - 1) / alpha_{t+1}) (M_{t+1} - M_t)
//! alpha_{t+1} = (1 + sqrt(1 + 4 alpha_t^2)) / 2,   alpha_1 = 1
//! ```
//!
//! The step size is found by backtracking on the quadratic majorization of
//! the smooth loss, and grows by [`STEP_GROWTH`] after each accepted step.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{pca_fit, DenseMatrix};
use crate::loss::{check_lambda, LossContext};
pub use crate::model::SimilarityModel;
use crate::pairs::{build_supervision, LabeledModality, PairSupervision};
use crate::prox::svt_with_spectrum;

/// Multiplier applied to the accepted step size before the next iteration.
pub const STEP_GROWTH: f64 = 1.1;

/// Backtracking gives up below this step size.
pub const MIN_STEP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Nuclear-norm weight.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
    /// Initial step size.
    pub eta0: f64,
    /// Backtracking factor in (0, 1).
    pub backtrack_shrink: f64,
    /// Recorded in model metadata; the loop itself is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iters: 500,
            rel_tol: 1e-6,
            eta0: 1.0,
            backtrack_shrink: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 must be positive, got {}", self.eta0));
        }
        if !(self.backtrack_shrink > 0.0 && self.backtrack_shrink < 1.0) {
            return bad(format!(
                "backtrack_shrink must lie in (0, 1), got {}",
                self.backtrack_shrink
            ));
        }
        Ok(())
    }
}

/// State after one accelerated iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Number of proximal steps taken so far (1-based).
    pub iter: usize,
    /// `f(M_t)`.
    pub objective: f64,
    /// `l(M_t)`.
    pub smooth: f64,
    /// `||M_t||_*`.
    pub nuclear: f64,
    /// Step size accepted for this iteration.
    pub eta: f64,
    /// Extrapolation weight `(alpha_t - 1) / alpha_{t+1}` applied after it.
    pub momentum: f64,
    pub rank: usize,
    /// Smallest objective seen up to and including this iteration.
    pub best_objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    /// Objective at the zero initialization.
    pub initial_objective: f64,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    /// Iteration of the returned iterate; 0 means the zero initialization.
    pub best_iter: usize,
}

impl TrainTrace {
    pub fn final_best_objective(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_objective, |r| r.best_objective)
    }

    /// Writes `iter,objective,smooth,nuclear,eta,momentum,rank` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,objective,smooth,nuclear,eta,momentum,rank")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                r.iter, r.objective, r.smooth, r.nuclear, r.eta, r.momentum, r.rank
            )?;
        }
        Ok(())
    }
}

/// `alpha_{t+1} = (1 + sqrt(1 + 4 alpha_t^2)) / 2`.
pub fn momentum_sequence(alpha: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0
}

/// Accepted proximal step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub m_next: DenseMatrix,
    pub eta_used: f64,
    /// `l(m_next)`, already evaluated by the acceptance test.
    pub smooth: f64,
    /// Nuclear norm of `m_next`.
    pub nuclear: f64,
    pub rank: usize,
}

/// One proximal gradient step from `q`, shrinking `eta` until
/// `l(M) <= l(Q) + <grad l(Q), M - Q> + ||M - Q||_F^2 / (2 eta)`.
pub fn backtracking_step(
    ctx: &LossContext<'_>,
    q: &DenseMatrix,
    eta: f64,
    lambda: f64,
    shrink: f64,
) -> Result<StepOutcome> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {eta}"
        )));
    }
    check_lambda(lambda)?;
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "backtracking factor must lie in (0, 1), got {shrink}"
        )));
    }
    let (lq, grad) = ctx.value_and_gradient(q)?;
    // Rounding slack on the comparison, at the level of l(Q)'s own error.
    let slack = 16.0 * f64::EPSILON * lq.abs().max(1.0);
    let mut eta = eta;
    while eta >= MIN_STEP {
        let shrunk = svt_with_spectrum(&q.add_scaled(-eta, &grad)?, lambda * eta)?;
        let diff = shrunk.matrix.sub(q)?;
        let smooth = ctx.objective_smooth(&shrunk.matrix)?;
        let model = lq + grad.inner(&diff)? + diff.inner(&diff)? / (2.0 * eta);
        if !smooth.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at step size {eta:e}"
            )));
        }
        if smooth <= model + slack {
            return Ok(StepOutcome {
                rank: shrunk.rank(),
                nuclear: shrunk.nuclear_norm(),
                m_next: shrunk.matrix,
                eta_used: eta,
                smooth,
            });
        }
        eta *= shrink;
    }
    Err(Error::Numerical(format!(
        "backtracking step size fell below {MIN_STEP:e} without satisfying the majorization test"
    )))
}

/// Runs accelerated proximal gradient from `M = 0` on explicit supervision.
///
/// Returns the best-objective iterate and the full trace. Hitting
/// `max_iters` is not an error; `trace.converged` records it.
pub fn train_supervised(
    x: &DenseMatrix,
    z: &DenseMatrix,
    sup: &PairSupervision,
    cfg: &TrainConfig,
) -> Result<(DenseMatrix, TrainTrace)> {
    cfg.validate()?;
    x.ensure_finite("x features")?;
    z.ensure_finite("z features")?;
    let ctx = LossContext::new(x, z, sup)?;
    let (d1, d2) = ctx.model_shape();

    let mut m_prev = DenseMatrix::zeros(d1, d2);
    let mut q = m_prev.clone();
    let mut alpha = 1.0;
    let mut eta = cfg.eta0;
    let mut f_prev = ctx.objective_smooth(&m_prev)?;

    let mut trace = TrainTrace {
        initial_objective: f_prev,
        ..TrainTrace::default()
    };
    let mut best = (f_prev, m_prev.clone());

    for t in 1..=cfg.max_iters {
        let step = backtracking_step(&ctx, &q, eta, cfg.lambda, cfg.backtrack_shrink)?;
        let objective = step.smooth + cfg.lambda * step.nuclear;
        if !objective.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at iteration {t}"
            )));
        }

        let alpha_next = momentum_sequence(alpha);
        let momentum = (alpha - 1.0) / alpha_next;
        let m_next = step.m_next;
        q = m_next.add_scaled(momentum, &m_next.sub(&m_prev)?)?;

        if objective < best.0 {
            best = (objective, m_next.clone());
            trace.best_iter = t;
        }
        trace.records.push(TraceRecord {
            iter: t,
            objective,
            smooth: step.smooth,
            nuclear: step.nuclear,
            eta: step.eta_used,
            momentum,
            rank: step.rank,
            best_objective: best.0,
        });

        let change = (objective - f_prev).abs() / f_prev.abs().max(1.0);
        m_prev = m_next;
        f_prev = objective;
        alpha = alpha_next;
        eta = step.eta_used * STEP_GROWTH;
        if change < cfg.rel_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((best.1, trace))
}

/// Trains a similarity model on the raw features of two labeled modalities.
pub fn train(
    x_mod: &LabeledModality,
    z_mod: &LabeledModality,
    cfg: &TrainConfig,
) -> Result<(SimilarityModel, TrainTrace)> {
    train_with_pca(x_mod, z_mod, cfg, None)
}

/// Like [`train`], optionally fitting an energy-threshold PCA on each
/// modality's training features first and storing it in the model.
pub fn train_with_pca(
    x_mod: &LabeledModality,
    z_mod: &LabeledModality,
    cfg: &TrainConfig,
    pca_energy: Option<f64>,
) -> Result<(SimilarityModel, TrainTrace)> {
    cfg.validate()?;
    let sup = build_supervision(x_mod, z_mod)?;
    let (pca_x, pca_z) = match pca_energy {
        Some(e) => (
            Some(pca_fit(x_mod.features(), e)?),
            Some(pca_fit(z_mod.features(), e)?),
        ),
        None => (None, None),
    };
    let x = match &pca_x {
        Some(p) => p.apply(x_mod.features())?,
        None => x_mod.features().clone(),
    };
    let z = match &pca_z {
        Some(p) => p.apply(z_mod.features())?,
        None => z_mod.features().clone(),
    };

    let (m, trace) = train_supervised(&x, &z, &sup, cfg)?;
    let mut model = SimilarityModel::new(m, cfg.lambda);
    model.pca_x = pca_x;
    model.pca_z = pca_z;
    let meta = &mut model.metadata;
    meta.insert("lambda".into(), format!("{:e}", cfg.lambda));
    meta.insert("max_iters".into(), cfg.max_iters.to_string());
    meta.insert("rel_tol".into(), format!("{:e}", cfg.rel_tol));
    meta.insert("seed".into(), cfg.seed.to_string());
    meta.insert("iterations".into(), trace.records.len().to_string());
    meta.insert("converged".into(), trace.converged.to_string());
    meta.insert(
        "objective".into(),
        format!("{:e}", trace.final_best_objective()),
    );
    meta.insert("train_pairs".into(), format!("{}x{}", x.cols(), z.cols()));
    if let Some(e) = pca_energy {
        meta.insert("pca_energy".into(), format!("{e}"));
    }
    Ok((model, trace))
}
