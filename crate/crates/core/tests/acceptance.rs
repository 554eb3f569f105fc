//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p lrbs --test acceptance`.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use lrbs::data::{
    encode_model, generate_synthetic, load_model, save_model, DatasetBundle, SyntheticSpec,
};
use lrbs::eval::{
    average_precision, evaluate, mean_average_precision, precision_scope_curve, rank_all,
    Direction, RankedRetrieval,
};
use lrbs::linalg::svd;
use lrbs::loss::LossContext;
use lrbs::optimizer::{backtracking_step, train, train_with_pca, TrainConfig, STEP_GROWTH};
use lrbs::pairs::supervision_from_labels;
use lrbs::prox::{check_svt_optimality, svt_with_spectrum};
use lrbs::{build_supervision, DenseMatrix, Error, LabeledModality, SimilarityModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_REL_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;
const SVT_SPECTRUM_TOL: f64 = 1e-8;
const PERTURB_RADII: [f64; 3] = [1e-3, 1e-2, 1e-1];
const PERTURBATIONS: usize = 10_000;
const APG_ITERS: usize = 500;
const ISTA_ITERS: usize = 25_000;
const EQUIV_REL_TOL: f64 = 1e-4;
const REFERENCE_ITERS: usize = 20_000;
const ENVELOPE_RATIO: f64 = 0.1;
const MAP_THRESHOLD: f64 = 0.9;
const BASELINE_BAND: (f64, f64) = (0.15, 0.30);
const MAP_MEAN_TOL: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn benchmark() -> DatasetBundle {
    generate_synthetic(&SyntheticSpec::benchmark()).expect("benchmark generates")
}

fn fixed_iterations(lambda: f64, max_iters: usize) -> TrainConfig {
    TrainConfig {
        lambda,
        max_iters,
        rel_tol: f64::MIN_POSITIVE,
        ..TrainConfig::default()
    }
}

fn random_labels(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (Vec<i64>, Vec<i64>) {
    loop {
        let a: Vec<i64> = (0..m).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<i64> = (0..n).map(|_| rng.random_range(0..3)).collect();
        if supervision_from_labels(&a, &b).is_ok() {
            return (a, b);
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (d1, d2) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let (m, n) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let x = gaussian(&mut rng, d1, m);
        let z = gaussian(&mut rng, d2, n);
        let (la, lb) = random_labels(&mut rng, m, n);
        let sup = supervision_from_labels(&la, &lb).unwrap();
        let q = gaussian(&mut rng, d1, d2).scale(0.3);
        let ctx = LossContext::new(&x, &z, &sup).unwrap();
        let g = ctx.gradient_smooth(&q).unwrap();
        let mut fd = DenseMatrix::zeros(d1, d2);
        for k in 0..d1 * d2 {
            let mut plus = q.clone();
            plus.as_mut_slice()[k] += FD_STEP;
            let mut minus = q.clone();
            minus.as_mut_slice()[k] -= FD_STEP;
            fd.as_mut_slice()[k] = (ctx.objective_smooth(&plus).unwrap()
                - ctx.objective_smooth(&minus).unwrap())
                / (2.0 * FD_STEP);
        }
        let err = g.sub(&fd).unwrap().frobenius_norm() / g.frobenius_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    outcome(
        worst < GRAD_REL_TOL && elapsed < Duration::from_secs(10),
        format!(
            "50 instances, worst relative error {worst:.2e} (< {GRAD_REL_TOL:e}), {elapsed:.2?}"
        ),
    )
}

fn prox_objective(m: &DenseMatrix, l: &DenseMatrix, gamma: f64) -> f64 {
    let d = m.sub(l).unwrap().frobenius_norm();
    0.5 * d * d + gamma * na_nuclear(m)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut spectrum_err: f64 = 0.0;
    let mut optimality_failures = 0;
    let mut worst_residual: f64 = 0.0;
    let mut cases = Vec::new();
    for _ in 0..50 {
        let (r, c) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let l = gaussian(&mut rng, r, c);
        let sigma = na_singular_values(&l);
        let gamma = rng.random_range(0.0..sigma[0] * 1.2);
        let shrunk = svt_with_spectrum(&l, gamma).unwrap();
        let got = na_singular_values(&shrunk.matrix);
        for (k, s) in sigma.iter().enumerate() {
            spectrum_err = spectrum_err.max((got[k] - (s - gamma).max(0.0)).abs());
        }
        let report = check_svt_optimality(&l, gamma, &shrunk.matrix).unwrap();
        worst_residual = worst_residual
            .max(report.left_residual)
            .max(report.right_residual)
            .max(report.spectral_excess);
        if !report.passed {
            optimality_failures += 1;
        }
        if cases.len() < 10 {
            cases.push((l, gamma, shrunk.matrix));
        }
    }
    let mut violations = 0;
    for (l, gamma, m) in &cases {
        let f0 = prox_objective(m, l, *gamma);
        for k in 0..PERTURBATIONS {
            let e = gaussian(&mut rng, l.rows(), l.cols());
            let e = e.scale(PERTURB_RADII[k % 3] / e.frobenius_norm());
            if prox_objective(&m.add(&e).unwrap(), l, *gamma) < f0 - 1e-12 * f0.max(1.0) {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        spectrum_err < SVT_SPECTRUM_TOL
            && optimality_failures == 0
            && violations == 0
            && elapsed < Duration::from_secs(30),
        format!(
            "(a) spectrum error {spectrum_err:.2e}; (b) optimality {}/50, worst residual {worst_residual:.2e}; \
             (c) {violations} violations in 10 x {PERTURBATIONS} perturbations; {elapsed:.2?}",
            50 - optimality_failures
        ),
    )
}

/// Non-accelerated proximal gradient with the same backtracking rule.
fn ista(ctx: &LossContext<'_>, lambda: f64, iters: usize) -> f64 {
    let (d1, d2) = ctx.model_shape();
    let mut m = DenseMatrix::zeros(d1, d2);
    let mut eta = 1.0;
    let mut best = ctx.objective_full(&m, lambda).unwrap();
    for _ in 0..iters {
        let step = backtracking_step(ctx, &m, eta, lambda, 0.5).unwrap();
        best = best.min(step.smooth + lambda * step.nuclear);
        m = step.m_next;
        eta = step.eta_used * STEP_GROWTH;
    }
    best
}

fn criterion_3(b: &DatasetBundle) -> Outcome {
    let start = Instant::now();
    let (_, trace) = train(&b.train_x, &b.train_z, &fixed_iterations(1e-3, APG_ITERS)).unwrap();
    let apg = trace.final_best_objective();
    let sup = build_supervision(&b.train_x, &b.train_z).unwrap();
    let ctx = LossContext::new(b.train_x.features(), b.train_z.features(), &sup).unwrap();
    let reference = ista(&ctx, 1e-3, ISTA_ITERS);
    let rel = (apg - reference).abs() / reference.abs();
    let elapsed = start.elapsed();
    outcome(
        rel < EQUIV_REL_TOL && elapsed < Duration::from_secs(120),
        format!(
            "APG@{} {apg:.10} vs ISTA@{ISTA_ITERS} {reference:.10}, relative gap {rel:.2e}; {elapsed:.2?}",
            trace.records.len()
        ),
    )
}

fn criterion_4(b: &DatasetBundle) -> Outcome {
    let (_, reference) = train(
        &b.train_x,
        &b.train_z,
        &fixed_iterations(1e-3, REFERENCE_ITERS),
    )
    .unwrap();
    let f_star = reference.final_best_objective();
    let (_, run) = train(&b.train_x, &b.train_z, &fixed_iterations(1e-3, 40)).unwrap();
    let gap10 = run.records[9].objective - f_star;
    let gap40 = run.records[39].objective - f_star;
    outcome(
        gap40 <= ENVELOPE_RATIO * gap10,
        format!(
            "f* {f_star:.10} ({} iterations); gap@10 {gap10:.3e}, gap@40 {gap40:.3e}, ratio {:.4}",
            reference.records.len(),
            gap40 / gap10
        ),
    )
}

fn criterion_5(b: &DatasetBundle) -> Outcome {
    let rank_at = |lambda: f64| {
        let cfg = TrainConfig {
            lambda,
            ..TrainConfig::default()
        };
        let (model, _) = train(&b.train_x, &b.train_z, &cfg).unwrap();
        svd(&model.m).unwrap().rank()
    };
    let (small, large) = (rank_at(1e-3), rank_at(1e-1));
    let bound = b.train_x.dim().min(b.train_z.dim());
    outcome(
        large <= small && large < bound,
        format!("rank {small} at lambda 1e-3, {large} at lambda 1e-1 (min(d1, d2) = {bound})"),
    )
}

fn map_both(model: &SimilarityModel, x: &LabeledModality, z: &LabeledModality) -> (f64, f64) {
    let run = |d: Direction| {
        let (q, g) = match d {
            Direction::XQueriesZ => (x, z),
            Direction::ZQueriesX => (z, x),
        };
        evaluate(
            model,
            (q.features(), q.labels()),
            (g.features(), g.labels()),
            d,
            None,
        )
        .unwrap()
        .map
    };
    (run(Direction::XQueriesZ), run(Direction::ZQueriesX))
}

fn criterion_6(b: &DatasetBundle) -> (Outcome, String) {
    let cfg = TrainConfig::default();
    let (model, _) = train(&b.train_x, &b.train_z, &cfg).unwrap();
    let (xz, zx) = map_both(&model, &b.test_x, &b.test_z);
    let zero = SimilarityModel::new(DenseMatrix::zeros(b.test_x.dim(), b.test_z.dim()), 0.0);
    let (zxz, zzx) = map_both(&zero, &b.test_x, &b.test_z);
    let in_band = |v: f64| (BASELINE_BAND.0..=BASELINE_BAND.1).contains(&v);
    let passed = xz >= MAP_THRESHOLD && zx >= MAP_THRESHOLD && in_band(zxz) && in_band(zzx);

    let (pca_model, _) = train_with_pca(&b.train_x, &b.train_z, &cfg, Some(0.99)).unwrap();
    let (pxz, pzx) = map_both(&pca_model, &b.test_x, &b.test_z);
    (
        outcome(
            passed,
            format!(
                "test MAP x->z {xz:.4}, z->x {zx:.4} (>= {MAP_THRESHOLD}); M = 0 baseline {zxz:.4} / {zzx:.4} \
                 (in [{}, {}])",
                BASELINE_BAND.0, BASELINE_BAND.1
            ),
        ),
        format!("with --pca-energy 0.99: test MAP x->z {pxz:.4}, z->x {pzx:.4}"),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let ap = average_precision(&[true, false, true, false]);
    if ap != 5.0 / 6.0 {
        failures.push(format!("AP([1,0,1,0]) = {ap:e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_mean: f64 = 0.0;
    for _ in 0..20 {
        let (nq, ng) = (rng.random_range(1..10), rng.random_range(2..20));
        let scores = gaussian(&mut rng, nq, ng);
        let ql: Vec<i64> = (0..nq).map(|_| rng.random_range(0..4)).collect();
        let gl: Vec<i64> = (0..ng).map(|_| rng.random_range(0..4)).collect();
        let ranked = rank_all(&scores, &ql, &gl).unwrap();

        let map = mean_average_precision(&ranked).unwrap();
        let mean = ranked
            .iter()
            .map(|r| average_precision(&r.relevance))
            .sum::<f64>()
            / nq as f64;
        worst_mean = worst_mean.max((map - mean).abs());

        for (name, f) in [
            ("exp", (|s: f64| s.exp()) as fn(f64) -> f64),
            ("affine", |s: f64| 3.0 * s + 7.0),
            ("cube", |s: f64| s * s * s),
        ] {
            let again = rank_all(&scores.map(f), &ql, &gl).unwrap();
            let same = again
                .iter()
                .zip(&ranked)
                .all(|(a, b)| a.ranked_gallery == b.ranked_gallery);
            if !same {
                failures.push(format!("ranking changed under {name} transform"));
            }
        }

        let full = precision_scope_curve(&ranked, &[ng]).unwrap()[0].1;
        let prior = ranked
            .iter()
            .map(RankedRetrieval::relevant_count)
            .sum::<usize>() as f64
            / (nq * ng) as f64;
        if (full - prior).abs() > 1e-12 {
            failures.push(format!("full-scope precision {full} vs prior {prior}"));
        }
    }
    if worst_mean > MAP_MEAN_TOL {
        failures.push(format!("MAP deviates from mean AP by {worst_mean:e}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("AP([1,0,1,0]) == 5/6 exactly; MAP = mean AP within {worst_mean:.1e}; transforms and scope prior hold")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_8(b: &DatasetBundle) -> Outcome {
    let again = benchmark();
    let data_same = again == *b;
    let cfg = TrainConfig::default();
    let (m1, t1) = train(&b.train_x, &b.train_z, &cfg).unwrap();
    let (m2, t2) = train(&b.train_x, &b.train_z, &cfg).unwrap();
    let bytes_same = encode_model(&m1) == encode_model(&m2);
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    t1.write_csv(&mut c1).unwrap();
    t2.write_csv(&mut c2).unwrap();
    let trace_same = c1 == c2;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lrbs");
    save_model(&path, &m1).unwrap();
    let loaded = load_model(&path).unwrap();
    let probe = m1.score(b.test_x.features(), b.test_z.features()).unwrap();
    let reloaded = loaded
        .score(b.test_x.features(), b.test_z.features())
        .unwrap();
    let bit_exact = probe
        .as_slice()
        .iter()
        .zip(reloaded.as_slice())
        .all(|(a, c)| a.to_bits() == c.to_bits());
    outcome(
        data_same && bytes_same && trace_same && bit_exact,
        format!(
            "dataset identical: {data_same}; model bytes identical: {bytes_same}; trace identical: {trace_same}; \
             reloaded {}x{} probe scores bit-exact: {bit_exact}",
            probe.rows(),
            probe.cols()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let f = DenseMatrix::zeros(2, 2);
    let same = LabeledModality::new(f.clone(), vec![1, 1]).unwrap();
    let differ_a = LabeledModality::new(f.clone(), vec![1, 1]).unwrap();
    let differ_b = LabeledModality::new(f.clone(), vec![2, 3]).unwrap();
    if !matches!(
        build_supervision(&same, &same),
        Err(Error::DegenerateSupervision { .. })
    ) {
        failures.push("no-negative supervision accepted".to_string());
    }
    if !matches!(
        build_supervision(&differ_a, &differ_b),
        Err(Error::DegenerateSupervision { .. })
    ) {
        failures.push("no-positive supervision accepted".to_string());
    }
    let x = LabeledModality::new(f.clone(), vec![0, 1]).unwrap();
    let neg = TrainConfig {
        lambda: -1.0,
        ..TrainConfig::default()
    };
    if !matches!(train(&x, &x, &neg), Err(Error::InvalidArgument(_))) {
        failures.push("negative lambda accepted by train".to_string());
    }

    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_lrbs");
    let exit = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    let ds = tmp.path().join("ds");
    let other = tmp.path().join("other");
    let model = tmp.path().join("m.lrbs");
    let (ds, other, model) = (
        ds.to_str().unwrap(),
        other.to_str().unwrap(),
        model.to_str().unwrap(),
    );
    let out = tmp.path().join("ev");
    let out = out.to_str().unwrap();
    let mut codes = Vec::new();
    let mut expect = |what: &str, got: Option<i32>, want: i32| {
        codes.push(format!(
            "{what}={}",
            got.map_or("signal".into(), |c| c.to_string())
        ));
        if got != Some(want) {
            failures.push(format!("{what} exited {got:?}, expected {want}"));
        }
    };
    expect(
        "gen",
        exit(&["gen", "--train", "4", "--test", "2", "--out", ds]),
        0,
    );
    expect(
        "gen-other",
        exit(&[
            "gen", "--dimx", "9", "--train", "4", "--test", "2", "--out", other,
        ]),
        0,
    );
    expect(
        "lambda<0",
        exit(&["train", "--data", ds, "--lambda", "-1", "--model", model]),
        3,
    );
    expect(
        "train",
        exit(&["train", "--data", ds, "--max-iters", "5", "--model", model]),
        0,
    );
    expect(
        "dim-mismatch",
        exit(&["eval", "--model", model, "--data", other, "--out", out]),
        3,
    );
    expect(
        "missing-file",
        exit(&[
            "eval",
            "--model",
            "/nonexistent/m.lrbs",
            "--data",
            ds,
            "--out",
            out,
        ]),
        2,
    );
    let detail = if failures.is_empty() {
        format!(
            "degenerate supervision and lambda < 0 rejected; exit codes {}",
            codes.join(" ")
        )
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let bench = benchmark();
    let (c6, c6_info) = criterion_6(&bench);
    let results = [
        ("gradient vs central differences", criterion_1()),
        ("singular value thresholding", criterion_2()),
        (
            "APG vs non-accelerated proximal gradient",
            criterion_3(&bench),
        ),
        ("convergence-rate envelope", criterion_4(&bench)),
        ("low rank vs lambda", criterion_5(&bench)),
        ("retrieval quality", c6),
        ("metric unit suite", criterion_7()),
        ("determinism and persistence", criterion_8(&bench)),
        ("degenerate inputs and exit codes", criterion_9()),
    ];

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {}", i + 1, o.detail);
        if i == 5 {
            println!("       info: {c6_info}");
        }
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
