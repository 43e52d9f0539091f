//! Command-line surface: dataset classification, distance export, timing
//! benchmarks, convergence studies, and synthetic data generation.
//!
//! Data goes to `--out` or stdout; diagnostics go to stderr. Exit code is
//! nonzero on any error. Runs with a fixed `--seed` are bit-reproducible in
//! everything except wall-clock metrics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use graph_dbd::data::{
    export_distance_matrix, export_distances, gen_two_clusters, gen_uniform_square, load_dataset,
    run_convergence_experiment, run_timing_experiment, write_distance_matrix, write_distances,
    DatasetFile, DatasetFormat, LabelSpec, LoadedDataset, ReportFormat,
};
use graph_dbd::{
    all_pairs_to_goals, error_rate, predict_1nn_dbd, search_to_goals, Engine, MetricParams,
    Prediction,
};

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Classify(args) => cmd_classify(args),
        Command::Distances(args) => cmd_distances(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

#[derive(Parser)]
#[command(
    name = "dbd",
    about = "Density-based distances over point sets and 1-NN semi-supervised classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify unlabeled points by 1-NN over graph-DBD distances.
    Classify(ClassifyArgs),
    /// Export per-point or all-pairs distances to the labeled points.
    Distances(DistancesArgs),
    /// Time Dijkstra* against k-NN graph construction plus Dijkstra.
    Bench(BenchArgs),
    /// Density-estimator and DBD convergence study on uniform data.
    Converge(ConvergeArgs),
    /// Generate synthetic datasets.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    data_format: Option<FormatArg>,
    /// Label source: a CSV column (name or 0-based index) or a label file path.
    #[arg(long)]
    labels: Option<String>,
    /// Missing-label sentinel.
    #[arg(long, default_value = "?")]
    sentinel: String,
    /// Ambient dimension for libsvm input (inferred when omitted).
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Idx,
    Libsvm,
}

#[derive(Args)]
struct EngineArgs {
    /// ℓp norm order.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// DBD exponent.
    #[arg(long, default_value_t = 8.0)]
    q: f64,
    /// Neighbor count for graph engines; 0 means the full graph via Dijkstra*.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Distance engine; defaults to dbd when k = 0, dbd-knn otherwise.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Dbd,
    DbdKnn,
    Isomap,
    Euclid,
}

impl EngineArgs {
    fn params(&self) -> anyhow::Result<MetricParams> {
        Ok(MetricParams::new(self.p, self.q)?)
    }

    fn engine(&self) -> anyhow::Result<Engine> {
        let engine = match self.engine {
            None => {
                if self.k == 0 {
                    Engine::Dbd
                } else {
                    Engine::DbdKnn(self.k)
                }
            }
            Some(EngineArg::Dbd) => Engine::Dbd,
            Some(EngineArg::DbdKnn) => Engine::DbdKnn(self.require_k("dbd-knn")?),
            Some(EngineArg::Isomap) => Engine::Isomap(self.require_k("isomap")?),
            Some(EngineArg::Euclid) => Engine::Euclid,
        };
        Ok(engine)
    }

    fn require_k(&self, name: &str) -> anyhow::Result<usize> {
        if self.k == 0 {
            bail!("engine {name} requires --k >= 1");
        }
        Ok(self.k)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl OutputArgs {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        match &self.out {
            Some(path) => {
                let file = File::create(path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                Ok(Box::new(BufWriter::new(file)))
            }
            None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
        }
    }

    fn report_format(&self) -> ReportFormat {
        match self.format {
            OutFormat::Csv => ReportFormat::Csv,
            OutFormat::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Ground-truth label file (one integer per row) for error reporting.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DistancesArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Export the full points × goals matrix instead of one row per point.
    #[arg(long)]
    all_pairs: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Input dataset; a synthetic uniform cube is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    data_format: Option<FormatArg>,
    /// Synthetic point count.
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    /// Synthetic dimension.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// k values for the graph baseline.
    #[arg(long, value_delimiter = ',', default_values_t = vec![15, 30, 100])]
    ks: Vec<usize>,
    /// Number of labeled points sampled per trial.
    #[arg(long, default_value_t = 100)]
    goals: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Sample sizes, strictly ascending.
    #[arg(long, value_delimiter = ',', default_values_t = vec![100, 1000, 10000])]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Dimension (uniform only).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Vertical gap between the two arms (two-clusters only).
    #[arg(long, default_value_t = 1.2)]
    separation: f64,
    /// Gaussian y-jitter scale (two-clusters only).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write ground-truth cluster ids here (two-clusters only).
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Uniform,
    TwoClusters,
}

fn infer_format(path: &Path, explicit: Option<FormatArg>) -> DatasetFormat {
    match explicit {
        Some(FormatArg::Csv) => DatasetFormat::Csv,
        Some(FormatArg::Idx) => DatasetFormat::Idx,
        Some(FormatArg::Libsvm) => DatasetFormat::Libsvm,
        None => {
            let name = path.to_string_lossy().to_lowercase();
            if name.ends_with(".idx") || name.contains("ubyte") {
                DatasetFormat::Idx
            } else if name.ends_with(".libsvm") || name.ends_with(".svm") {
                DatasetFormat::Libsvm
            } else {
                DatasetFormat::Csv
            }
        }
    }
}

fn load(args: &DataArgs) -> anyhow::Result<LoadedDataset> {
    let format = infer_format(&args.data, args.data_format);
    let labels = match &args.labels {
        None => LabelSpec::None,
        Some(value) => {
            let as_path = Path::new(value);
            if as_path.exists() {
                LabelSpec::File(as_path.to_path_buf())
            } else {
                LabelSpec::Column(value.clone())
            }
        }
    };
    let mut spec = DatasetFile::new(&args.data, format)
        .with_labels(labels)
        .with_sentinel(&args.sentinel);
    if let Some(dim) = args.dim {
        spec = spec.with_dim(dim);
    }
    Ok(load_dataset(&spec)?)
}

fn read_truth(path: &Path, loaded: &LoadedDataset, n: usize) -> anyhow::Result<Vec<usize>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut truth = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line
            .parse()
            .with_context(|| format!("{}:{}: `{line}` is not an integer", path.display(), i + 1))?;
        // Values outside the dataset's label set can never match a prediction.
        truth.push(loaded.class_of(value).unwrap_or(usize::MAX));
    }
    if truth.len() != n {
        bail!(
            "truth file {} has {} labels for {} points",
            path.display(),
            truth.len(),
            n
        );
    }
    Ok(truth)
}

fn write_prediction(
    prediction: &Prediction,
    loaded: &LoadedDataset,
    error: Option<f64>,
    output: &OutputArgs,
) -> anyhow::Result<()> {
    let label_value = |id: usize| -> i64 {
        loaded
            .label_values
            .get(id)
            .copied()
            .unwrap_or(id as i64)
    };
    let mut w = output.writer()?;
    match output.format {
        OutFormat::Csv => {
            writeln!(w, "point_index,predicted_label,cost,decisive_point,fallback")?;
            for item in prediction.items() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    item.point,
                    label_value(item.label),
                    if item.cost.is_finite() {
                        format!("{}", item.cost)
                    } else {
                        "inf".to_string()
                    },
                    item.decisive,
                    item.fallback
                )?;
            }
        }
        OutFormat::Json => {
            let items: Vec<serde_json::Value> = prediction
                .items()
                .iter()
                .map(|item| {
                    serde_json::json!({
                        "point": item.point,
                        "predicted_label": label_value(item.label),
                        "cost": if item.cost.is_finite() {
                            serde_json::json!(item.cost)
                        } else {
                            serde_json::json!("inf")
                        },
                        "decisive_point": item.decisive,
                        "fallback": item.fallback,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "predictions": items,
                "fallback_count": prediction.fallback_count(),
                "error_rate": error,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let loaded = load(&args.data)?;
    let params = args.engine.params()?;
    let engine = args.engine.engine()?;
    let prediction = predict_1nn_dbd(&loaded.dataset, &params, engine)?;
    let error = match &args.truth {
        Some(path) => {
            let truth = read_truth(path, &loaded, loaded.dataset.points().len())?;
            Some(error_rate(&prediction, &truth)?)
        }
        None => None,
    };
    write_prediction(&prediction, &loaded, error, &args.output)?;
    if let Some(e) = error {
        eprintln!(
            "classified {} points, error rate {e:.6}, {} fallbacks",
            prediction.len(),
            prediction.fallback_count()
        );
    } else {
        eprintln!(
            "classified {} points, {} fallbacks",
            prediction.len(),
            prediction.fallback_count()
        );
    }
    Ok(())
}

fn cmd_distances(args: DistancesArgs) -> anyhow::Result<()> {
    let loaded = load(&args.data)?;
    let params = args.engine.params()?;
    let engine = args.engine.engine()?;
    let goals = loaded.dataset.goal_set()?;
    if args.output.format == OutFormat::Json {
        bail!("distances exports CSV only");
    }
    match (&args.output.out, args.all_pairs) {
        (Some(path), true) => {
            let matrix = all_pairs_to_goals(loaded.dataset.points(), &goals, &params, engine)?;
            export_distance_matrix(&matrix, path)?;
        }
        (Some(path), false) => {
            let result = search_to_goals(loaded.dataset.points(), &goals, &params, engine)?;
            export_distances(&result, &goals, path)?;
        }
        (None, true) => {
            let matrix = all_pairs_to_goals(loaded.dataset.points(), &goals, &params, engine)?;
            let mut w = args.output.writer()?;
            write_distance_matrix(&matrix, &mut w)?;
            w.flush()?;
        }
        (None, false) => {
            let result = search_to_goals(loaded.dataset.points(), &goals, &params, engine)?;
            let mut w = args.output.writer()?;
            write_distances(&result, &goals, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let params = MetricParams::new(args.p, args.q)?;
    let points = match &args.data {
        Some(path) => {
            let spec = DatasetFile::new(path, infer_format(path, args.data_format));
            load_dataset(&spec)?.dataset.points().clone()
        }
        None => {
            eprintln!("generating {} uniform points in [0,1]^{}", args.n, args.d);
            gen_uniform_square(args.n, args.d, args.seed)?
        }
    };
    eprintln!(
        "benchmarking n={}, d={}, ks={:?}, {} goals, {} trials",
        points.len(),
        points.dim(),
        args.ks,
        args.goals,
        args.trials
    );
    let report = run_timing_experiment(
        &points,
        &args.ks,
        args.goals,
        args.trials,
        &params,
        args.seed,
    )?;
    let mut w = args.output.writer()?;
    report.write(&mut w, args.output.report_format())?;
    w.flush()?;
    Ok(())
}

fn cmd_converge(args: ConvergeArgs) -> anyhow::Result<()> {
    let params = MetricParams::new(args.p, args.q)?;
    let report = run_convergence_experiment(&args.ns, args.trials, &params, args.seed)?;
    let mut w = args.output.writer()?;
    report.write(&mut w, args.output.report_format())?;
    w.flush()?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    if args.output.format == OutFormat::Json {
        bail!("synth writes CSV only");
    }
    let mut w = args.output.writer()?;
    match args.kind {
        SynthKind::Uniform => {
            let points = gen_uniform_square(args.n, args.d, args.seed)?;
            for i in 0..args.d {
                write!(w, "{}x{}", if i > 0 { "," } else { "" }, i)?;
            }
            writeln!(w)?;
            for row in points.iter() {
                let fields: Vec<String> = row.iter().map(|c| format!("{c}")).collect();
                writeln!(w, "{}", fields.join(","))?;
            }
        }
        SynthKind::TwoClusters => {
            let tc = gen_two_clusters(args.n, args.separation, args.noise, args.seed)?;
            writeln!(w, "x0,x1,label")?;
            let labels = tc.dataset.labels();
            for (i, row) in tc.dataset.points().iter().enumerate() {
                let label = match labels[i] {
                    Some(l) => l.to_string(),
                    None => "?".to_string(),
                };
                writeln!(w, "{},{},{label}", row[0], row[1])?;
            }
            if let Some(path) = &args.truth_out {
                let mut tw = BufWriter::new(
                    File::create(path)
                        .with_context(|| format!("cannot create {}", path.display()))?,
                );
                for t in &tc.truth {
                    writeln!(tw, "{t}")?;
                }
                tw.flush()?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
