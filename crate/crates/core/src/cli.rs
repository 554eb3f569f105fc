//! Subcommands of the `lrbs` tool.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use lrbs::data::{self, generate_synthetic, load_modality, SyntheticSpec};
use lrbs::eval::{rank_all, score_all, Direction, MetricReport};
use lrbs::optimizer::{train_with_pca, TrainConfig};
use lrbs::{Error, LabeledModality, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lrbs",
    version,
    about = "Low-rank bilinear similarity learning for cross-modal retrieval",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic two-modality dataset.
    Gen(GenArgs),
    /// Train a similarity model on the training split.
    Train(TrainArgs),
    /// Write the query x gallery similarity matrix.
    Score(ScoreArgs),
    /// Write the top-ranked gallery items for every query.
    Retrieve(RetrieveArgs),
    /// Compute MAP, precision-recall and precision-scope curves.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct GenArgs {
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 4)]
    latent: usize,
    #[arg(long, default_value_t = 30)]
    dimx: usize,
    #[arg(long, default_value_t = 20)]
    dimz: usize,
    /// Training samples per class and modality.
    #[arg(long, default_value_t = 20)]
    train: usize,
    /// Test samples per class and modality.
    #[arg(long, default_value_t = 10)]
    test: usize,
    #[arg(long, default_value_t = 0.3)]
    sigma: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
}

/// Where the two modalities come from: a dataset directory written by `gen`
/// or explicit feature/label files.
#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding <split>_x.csv, <split>_x.labels, <split>_z.csv, <split>_z.labels.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    split: Option<Split>,
    #[arg(long)]
    x_features: Option<PathBuf>,
    #[arg(long)]
    x_labels: Option<PathBuf>,
    #[arg(long)]
    z_features: Option<PathBuf>,
    #[arg(long)]
    z_labels: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self, default_split: Split) -> Result<(LabeledModality, LabeledModality)> {
        let split = match self.split.unwrap_or(default_split) {
            Split::Train => "train",
            Split::Test => "test",
        };
        let path = |explicit: &Option<PathBuf>, suffix: &str| -> Result<PathBuf> {
            match (explicit, &self.data) {
                (Some(p), _) => Ok(p.clone()),
                (None, Some(dir)) => Ok(dir.join(format!("{split}_{suffix}"))),
                (None, None) => Err(Error::InvalidArgument(format!(
                    "pass --data or the explicit file for {suffix}"
                ))),
            }
        };
        let x = load_modality(
            &path(&self.x_features, "x.csv")?,
            &path(&self.x_labels, "x.labels")?,
        )?;
        let z = load_modality(
            &path(&self.z_features, "z.csv")?,
            &path(&self.z_labels, "z.labels")?,
        )?;
        Ok((x, z))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Nuclear-norm weight.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Fit PCA on the training features keeping this energy fraction.
    #[arg(long)]
    pca_energy: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Relative objective change that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    eta0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    XQuery,
    ZQuery,
    Both,
}

impl DirectionArg {
    fn directions(self) -> &'static [Direction] {
        match self {
            DirectionArg::XQuery => &[Direction::XQueriesZ],
            DirectionArg::ZQuery => &[Direction::ZQueriesX],
            DirectionArg::Both => &[Direction::XQueriesZ, Direction::ZQueriesX],
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "x-query")]
    direction: DirectionArg,
    /// Output CSV, one row per query.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "x-query")]
    direction: DirectionArg,
    /// Number of gallery items to list per query (default: all).
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "both")]
    direction: DirectionArg,
    /// Comma-separated scopes for the precision-scope curve.
    #[arg(long, value_delimiter = ',')]
    scopes: Option<Vec<usize>>,
    /// Output directory for metrics.json and curve CSVs.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Score(a) => cmd_score(a),
        Command::Retrieve(a) => cmd_retrieve(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_gen(a: GenArgs) -> Result<String> {
    let spec = SyntheticSpec {
        classes: a.classes,
        latent_dim: a.latent,
        dim_x: a.dimx,
        dim_z: a.dimz,
        per_class_train: a.train,
        per_class_test: a.test,
        noise_sigma: a.sigma,
        seed: a.seed,
    };
    let bundle = generate_synthetic(&spec)?;
    bundle.save(&a.out)?;
    Ok(format!(
        "wrote {} ({} train / {} test samples per modality) to {}",
        bundle.name,
        bundle.train_x.count(),
        bundle.test_x.count(),
        a.out.display()
    ))
}

fn cmd_train(a: TrainArgs) -> Result<String> {
    let cfg = TrainConfig {
        lambda: a.lambda,
        max_iters: a.max_iters,
        rel_tol: a.tol,
        eta0: a.eta0,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let (x, z) = a.data.load(Split::Train)?;
    let (mut model, trace) = train_with_pca(&x, &z, &cfg, a.pca_energy)?;
    if let Some(dir) = &a.data.data {
        if let Some(name) = dir.file_name() {
            model
                .metadata
                .insert("dataset".into(), name.to_string_lossy().into_owned());
        }
    }
    data::save_model(&a.model, &model)?;
    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        trace
            .write_csv(&mut buf)
            .map_err(|e| Error::io(path.as_path(), e))?;
        write(path, &buf)?;
    }
    let last = trace.records.last().expect("at least one iteration");
    Ok(format!(
        "trained {}x{} model: objective {:.6e}, rank {}, {} iterations{} -> {}",
        model.m.rows(),
        model.m.cols(),
        trace.final_best_objective(),
        last.rank,
        trace.records.len(),
        if trace.converged {
            ""
        } else {
            " (max iterations reached)"
        },
        a.model.display()
    ))
}

/// Query and gallery matrices for one direction.
fn sides<'a>(
    d: Direction,
    x: &'a LabeledModality,
    z: &'a LabeledModality,
) -> (&'a LabeledModality, &'a LabeledModality) {
    match d {
        Direction::XQueriesZ => (x, z),
        Direction::ZQueriesX => (z, x),
    }
}

fn single_direction(d: DirectionArg) -> Result<Direction> {
    match d {
        DirectionArg::XQuery => Ok(Direction::XQueriesZ),
        DirectionArg::ZQuery => Ok(Direction::ZQueriesX),
        DirectionArg::Both => Err(Error::InvalidArgument(
            "this subcommand takes a single direction".into(),
        )),
    }
}

fn cmd_score(a: ScoreArgs) -> Result<String> {
    let model = data::load_model(&a.model)?;
    let (x, z) = a.data.load(Split::Test)?;
    let d = single_direction(a.direction)?;
    let (q, g) = sides(d, &x, &z);
    let scores = score_all(&model, q.features(), g.features(), d)?;
    let mut out = String::new();
    for i in 0..scores.rows() {
        let row: Vec<String> = scores.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write(&a.out, out.as_bytes())?;
    Ok(format!(
        "scored {} queries against {} gallery items -> {}",
        scores.rows(),
        scores.cols(),
        a.out.display()
    ))
}

fn cmd_retrieve(a: RetrieveArgs) -> Result<String> {
    let model = data::load_model(&a.model)?;
    let (x, z) = a.data.load(Split::Test)?;
    let d = single_direction(a.direction)?;
    let (q, g) = sides(d, &x, &z);
    let scores = score_all(&model, q.features(), g.features(), d)?;
    let ranked = rank_all(&scores, q.labels(), g.labels())?;
    let top = a.top.unwrap_or(g.count()).min(g.count());
    let mut out = String::from("query,rank,gallery_index,score,relevant\n");
    for r in &ranked {
        for (pos, &j) in r.ranked_gallery.iter().take(top).enumerate() {
            out.push_str(&format!(
                "{},{},{},{:.16e},{}\n",
                r.query_index,
                pos + 1,
                j,
                scores[(r.query_index, j)],
                u8::from(r.relevance[pos])
            ));
        }
    }
    write(&a.out, out.as_bytes())?;
    Ok(format!(
        "ranked top {top} of {} gallery items for {} queries -> {}",
        g.count(),
        ranked.len(),
        a.out.display()
    ))
}

fn cmd_eval(a: EvalArgs) -> Result<String> {
    let model = data::load_model(&a.model)?;
    let (x, z) = a.data.load(Split::Test)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(a.out.as_path(), e))?;

    let mut maps = Map::new();
    let mut doc = Map::new();
    let mut total = 0.0;
    for &d in a.direction.directions() {
        let (q, g) = sides(d, &x, &z);
        let report = lrbs::eval::evaluate(
            &model,
            (q.features(), q.labels()),
            (g.features(), g.labels()),
            d,
            a.scopes.as_deref(),
        )?;
        total += report.map;
        maps.insert(d.key().into(), json!(report.map));
        write_curves(&a.out, d.key(), &report)?;
        doc.insert(
            d.key().into(),
            serde_json::to_value(&report).expect("report serializes"),
        );
    }
    let average = total / a.direction.directions().len() as f64;
    maps.insert("average".into(), json!(average));

    let summary: Vec<String> = maps
        .iter()
        .map(|(k, v)| format!("{k}={:.4}", v.as_f64().unwrap_or(f64::NAN)))
        .collect();
    doc.insert("map".into(), Value::Object(maps));
    let json_path = a.out.join("metrics.json");
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
    text.push('\n');
    write(&json_path, text.as_bytes())?;
    Ok(format!(
        "MAP {} -> {}",
        summary.join(" "),
        json_path.display()
    ))
}

fn write_curves(dir: &Path, key: &str, report: &MetricReport) -> Result<()> {
    let mut pr = Vec::new();
    let mut scope = Vec::new();
    report.write_pr_csv(&mut pr).expect("in-memory write");
    report.write_scope_csv(&mut scope).expect("in-memory write");
    write(&dir.join(format!("{key}_pr.csv")), &pr)?;
    write(&dir.join(format!("{key}_scope.csv")), &scope)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
