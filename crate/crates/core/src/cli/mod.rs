//! Command-line front end. Every subcommand reads an optional strict JSON
//! config (`--config`, which may also be a previous run's manifest),
//! applies flag overrides, validates, runs, and writes its outputs plus a
//! `manifest.json` into the output directory.

pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;

use crate::datasets::{synthetic, LabeledCloud, Split};
use crate::error::{Error, Result};
use crate::experiments::{convergence_benchmark, layerwise_betti, network_id};
use crate::nn::{train, Network, Optimizer};
use crate::pointcloud::PointCloud;
use crate::pruning::{evaluate, filter_betti_scores, percentile_threshold, prune_filters, write_scores_csv};
use crate::tensor::Tensor;
use crate::topology::{betti_profile, BettiConfig};

pub use config::*;
pub use manifest::{Manifest, Outputs};

/// Exit status for a run stopped by the simplex budget.
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "toponet", version, about = "Betti numbers of data and network feature spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the nine-rings or nine-spheres dataset as CSV.
    GenData(GenDataArgs),
    /// Betti numbers and persistence diagram of one point cloud.
    Betti(BettiArgs),
    /// Train a network and save it.
    Train(TrainArgs),
    /// Epochs-to-threshold comparison of activations over several seeds.
    Benchmark(BenchmarkArgs),
    /// Betti numbers of one class at the input and after every layer.
    LayerBetti(LayerBettiArgs),
    /// Score convolutional filters and remove those above a threshold.
    Prune(PruneArgs),
    /// Accuracy, size and latency of a saved network.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Betti(_) => "betti",
            Command::Train(_) => "train",
            Command::Benchmark(_) => "benchmark",
            Command::LayerBetti(_) => "layer-betti",
            Command::Prune(_) => "prune",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// nine-rings, nine-spheres, fashion-mnist, cifar10, tensors or csv.
    #[arg(long)]
    pub dataset: Option<DatasetKind>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Generation seed of synthetic datasets.
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long)]
    pub train_limit: Option<usize>,
    #[arg(long)]
    pub test_limit: Option<usize>,
}

impl DataArgs {
    fn apply(&self, d: &mut DataConfig) {
        set(&mut d.dataset, self.dataset);
        if self.data_dir.is_some() {
            d.dir = self.data_dir.clone();
        }
        set(&mut d.n_train, self.n_train);
        set(&mut d.n_test, self.n_test);
        set(&mut d.seed, self.data_seed);
        if self.train_limit.is_some() {
            d.train_limit = self.train_limit;
        }
        if self.test_limit.is_some() {
            d.test_limit = self.test_limit;
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BettiFlags {
    /// Landmark count.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Distance quantile choosing the scale.
    #[arg(long)]
    pub quantile: Option<f64>,
    #[arg(long)]
    pub max_dim: Option<usize>,
    /// Count only intervals with persistence >= delta * eps.
    #[arg(long)]
    pub robust_delta: Option<f64>,
    #[arg(long)]
    pub simplex_budget: Option<usize>,
}

impl BettiFlags {
    fn apply(&self, b: &mut BettiConfig, seed: Option<u64>) {
        set(&mut b.subsample, self.subsample);
        set(&mut b.quantile, self.quantile);
        set(&mut b.max_dim, self.max_dim);
        if self.robust_delta.is_some() {
            b.robust_delta = self.robust_delta;
        }
        set(&mut b.simplex_budget, self.simplex_budget);
        set(&mut b.seed, seed);
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    /// nine-rings or nine-spheres.
    pub dataset: Option<DatasetKind>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BettiArgs {
    /// Point-cloud CSV or tensor file.
    pub input: Option<PathBuf>,
    /// Read a labeled gen-data CSV and measure this class.
    #[arg(long)]
    pub label: Option<usize>,
    /// Landmark seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub betti: BettiFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// mlp or cnn.
    #[arg(long)]
    pub arch: Option<Arch>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// relu, leaky-relu[:alpha], sigmoid, tanh, stacked-sine[:width].
    #[arg(long)]
    pub activation: Option<String>,
    /// all, middle, or hidden-layer positions such as 3,4,5.
    #[arg(long)]
    pub placement: Option<String>,
    /// sgd or adam.
    #[arg(long)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub acc_threshold: Option<f64>,
    /// Stop at the first epoch reaching the accuracy threshold.
    #[arg(long)]
    pub stop_at_threshold: bool,
    /// Initialization and shuffling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub arch: Option<Arch>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Comma-separated; the first is the baseline.
    #[arg(long, value_delimiter = ',')]
    pub activations: Option<Vec<String>>,
    /// all, middle, or hidden-layer positions such as 3,4,5.
    #[arg(long)]
    pub placement: Option<String>,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// First seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub batch_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LayerBettiArgs {
    /// Model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// train or test.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    #[arg(long = "class")]
    pub class_label: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Landmark seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub betti: BettiFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PruneArgs {
    /// Model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Remove filters whose total Betti number exceeds this.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Use this percentile of the scores as the threshold instead.
    #[arg(long)]
    pub percentile: Option<f64>,
    /// Inputs used to score each filter.
    #[arg(long)]
    pub sample_n: Option<usize>,
    #[arg(long)]
    pub retrain_epochs: Option<usize>,
    /// Landmark and retraining seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub betti: BettiFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(format!("unknown split `{other}`")),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Runs a parsed command line; the error's exit code is [`exit_code`].
pub fn run(cli: Cli) -> Result<()> {
    let name = cli.command.name();
    match cli.command {
        Command::GenData(a) => {
            let mut cfg: GenDataConfig = load_config(a.common.config.as_deref(), name)?;
            set(&mut cfg.dataset, a.dataset);
            set(&mut cfg.n_train, a.n_train);
            set(&mut cfg.n_test, a.n_test);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.out, a.common.out);
            cfg.validate()?;
            gen_data(&cfg)
        }
        Command::Betti(a) => {
            let mut cfg: BettiRunConfig = load_config(a.common.config.as_deref(), name)?;
            set(&mut cfg.input, a.input);
            if a.label.is_some() {
                cfg.label = a.label;
            }
            a.betti.apply(&mut cfg.betti, a.seed);
            set(&mut cfg.out, a.common.out);
            cfg.validate()?;
            betti(&cfg)
        }
        Command::Train(a) => {
            let mut cfg: TrainRunConfig = load_config(a.common.config.as_deref(), name)?;
            a.data.apply(&mut cfg.data);
            set(&mut cfg.model.arch, a.arch);
            set(&mut cfg.model.depth, a.depth);
            set(&mut cfg.model.width, a.width);
            set(&mut cfg.activation, a.activation);
            set(&mut cfg.placement, a.placement);
            set(&mut cfg.train.optimizer, a.optimizer);
            set(&mut cfg.train.lr, a.lr);
            set(&mut cfg.train.batch_size, a.batch_size);
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.acc_threshold, a.acc_threshold);
            cfg.train.stop_at_threshold |= a.stop_at_threshold;
            set(&mut cfg.train.seed, a.seed);
            set(&mut cfg.out, a.common.out);
            cfg.data.resolve()?;
            cfg.validate()?;
            train_cmd(&cfg)
        }
        Command::Benchmark(a) => {
            let mut cfg: BenchmarkRunConfig = load_config(a.common.config.as_deref(), name)?;
            a.data.apply(&mut cfg.data);
            set(&mut cfg.model.arch, a.arch);
            set(&mut cfg.model.depth, a.depth);
            set(&mut cfg.model.width, a.width);
            set(&mut cfg.activations, a.activations);
            set(&mut cfg.placement, a.placement);
            set(&mut cfg.seeds, a.seeds);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.threshold, a.threshold);
            set(&mut cfg.max_epochs, a.max_epochs);
            set(&mut cfg.batch_sizes, a.batch_sizes);
            set(&mut cfg.optimizer, a.optimizer);
            set(&mut cfg.lr, a.lr);
            set(&mut cfg.out, a.common.out);
            cfg.data.resolve()?;
            cfg.validate()?;
            benchmark(&cfg)
        }
        Command::LayerBetti(a) => {
            let mut cfg: LayerBettiRunConfig = load_config(a.common.config.as_deref(), name)?;
            set(&mut cfg.model, a.model);
            a.data.apply(&mut cfg.data);
            set(&mut cfg.split, a.split);
            set(&mut cfg.class_label, a.class_label);
            if a.samples.is_some() {
                cfg.samples = a.samples;
            }
            a.betti.apply(&mut cfg.betti, a.seed);
            set(&mut cfg.out, a.common.out);
            cfg.data.resolve()?;
            cfg.validate()?;
            layer_betti(&cfg)
        }
        Command::Prune(a) => {
            let mut cfg: PruneRunConfig = load_config(a.common.config.as_deref(), name)?;
            set(&mut cfg.model, a.model);
            a.data.apply(&mut cfg.data);
            set(&mut cfg.threshold, a.threshold);
            if a.percentile.is_some() {
                cfg.percentile = a.percentile;
            }
            set(&mut cfg.score.sample_n, a.sample_n);
            set(&mut cfg.retrain_epochs, a.retrain_epochs);
            set(&mut cfg.train.seed, a.seed);
            a.betti.apply(&mut cfg.score.betti, a.seed);
            set(&mut cfg.out, a.common.out);
            cfg.data.resolve()?;
            cfg.validate()?;
            prune(&cfg)
        }
        Command::Evaluate(a) => {
            let mut cfg: EvaluateRunConfig = load_config(a.common.config.as_deref(), name)?;
            set(&mut cfg.model, a.model);
            a.data.apply(&mut cfg.data);
            set(&mut cfg.split, a.split);
            set(&mut cfg.out, a.common.out);
            cfg.data.resolve()?;
            cfg.validate()?;
            evaluate_cmd(&cfg)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SimplexBudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct DatasetMetadata<'a> {
    dataset: &'a str,
    n_train: usize,
    n_test: usize,
    seed: u64,
    classes: usize,
    dim: usize,
    geometry: serde_json::Value,
}

pub fn gen_data(cfg: &GenDataConfig) -> Result<()> {
    let start = Instant::now();
    let data = DataConfig { dataset: cfg.dataset, n_train: cfg.n_train, n_test: cfg.n_test, seed: cfg.seed, ..Default::default() };
    let (train, test) = data.load()?;
    let geometry = match cfg.dataset {
        DatasetKind::NineRings => serde_json::to_value(synthetic::NineRingGeometry::default())?,
        _ => serde_json::to_value(synthetic::NineSphereGeometry::default())?,
    };
    let mut out = Outputs::create(&cfg.out)?;
    out.write("train.csv", &csv_bytes(|b| train.write_csv(b))?)?;
    out.write("test.csv", &csv_bytes(|b| test.write_csv(b))?)?;
    out.json(
        "metadata.json",
        &DatasetMetadata {
            dataset: cfg.dataset.name(),
            n_train: train.len(),
            n_test: test.len(),
            seed: cfg.seed,
            classes: train.num_classes,
            dim: train.shape.features(),
            geometry,
        },
    )?;
    println!("{}: {} train, {} test rows -> {}", cfg.dataset.name(), train.len(), test.len(), cfg.out.display());
    Manifest::new("gen-data", cfg, cfg.seed).finish(out, start)
}

fn read_cloud(cfg: &BettiRunConfig) -> Result<PointCloud> {
    let path = &cfg.input;
    let is_tensor = path.extension().is_some_and(|e| e == "tnnt");
    if is_tensor {
        let t = Tensor::read(std::io::BufReader::new(std::fs::File::open(path)?))?;
        let n = *t.dims.first().ok_or_else(|| Error::ShapeMismatch("scalar tensor".into()))?;
        let d = t.data.len().checked_div(n).unwrap_or(0);
        let x = Array2::from_shape_vec((n, d), t.data.iter().map(|&v| v as f64).collect())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        return PointCloud::new(x);
    }
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    match cfg.label {
        Some(label) => LabeledCloud::read_csv(reader, Split::Train)?.class_cloud(label),
        None => PointCloud::read_csv(reader),
    }
}

#[derive(Serialize)]
struct BettiReport<'a> {
    betti: &'a [usize],
    eps: f64,
    points: usize,
    subsample: usize,
    simplices: usize,
    euler_characteristic: i64,
    config: &'a BettiConfig,
}

pub fn betti(cfg: &BettiRunConfig) -> Result<()> {
    let start = Instant::now();
    let cloud = read_cloud(cfg)?;
    let profile = betti_profile(&cloud, &cfg.betti)?;
    let mut out = Outputs::create(&cfg.out)?;
    out.json(
        "betti.json",
        &BettiReport {
            betti: &profile.betti.betti,
            eps: profile.eps(),
            points: cloud.len(),
            subsample: profile.subsample,
            simplices: profile.simplices,
            euler_characteristic: profile.betti.euler_characteristic(),
            config: &cfg.betti,
        },
    )?;
    out.write("diagram.csv", &csv_bytes(|b| profile.diagram.write_csv(b))?)?;
    println!("betti {:?} at eps {:.6}", profile.betti.betti, profile.eps());
    let mut manifest = Manifest::new("betti", cfg, cfg.betti.seed);
    manifest.add_input(&cfg.input)?;
    manifest.finish(out, start)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    network_id: String,
    params: usize,
    epochs_run: usize,
    epochs_to_threshold: Option<usize>,
    final_train_acc: f64,
    final_test_acc: f64,
    records: &'a [crate::nn::TrainRecord],
}

pub fn train_cmd(cfg: &TrainRunConfig) -> Result<()> {
    let start = Instant::now();
    let (train_data, test_data) = cfg.data.load()?;
    let spec = cfg.spec(&train_data)?;
    let net = Network::new(spec)?;
    let (net, log) = train(&net, &train_data, &test_data, &cfg.train)?;
    let mut out = Outputs::create(&cfg.out)?;
    out.save_model("model", &net)?;
    let mut csv = String::from("epoch,train_loss,train_acc,test_acc\n");
    for r in &log.records {
        csv.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.train_acc, r.test_acc));
    }
    out.write("train_log.csv", csv.as_bytes())?;
    let last = log.records.last();
    let summary = TrainSummary {
        network_id: network_id(&net),
        params: net.param_count(),
        epochs_run: log.records.len(),
        epochs_to_threshold: log.epochs_to_threshold,
        final_train_acc: last.map_or(0.0, |r| r.train_acc),
        final_test_acc: last.map_or(0.0, |r| r.test_acc),
        records: &log.records,
    };
    out.json("train_log.json", &summary)?;
    println!(
        "trained {} epochs: train acc {:.4}, test acc {:.4}, threshold epoch {:?}",
        summary.epochs_run, summary.final_train_acc, summary.final_test_acc, summary.epochs_to_threshold
    );
    Manifest::new("train", cfg, cfg.train.seed).finish(out, start)
}

pub fn benchmark(cfg: &BenchmarkRunConfig) -> Result<()> {
    let start = Instant::now();
    let (train_data, test_data) = cfg.data.load()?;
    let base = cfg.model.build(&train_data, crate::nn::ActivationKind::Relu, cfg.seed)?;
    let choices = cfg.choices(base.hidden_layers().len())?;
    let report = convergence_benchmark(&base, &choices, &train_data, &test_data, &cfg.benchmark_config())?;
    let mut out = Outputs::create(&cfg.out)?;
    out.json("convergence.json", &report)?;
    out.write("runs.csv", &csv_bytes(|b| report.write_csv(b))?)?;
    for s in &report.summaries {
        println!("{} batch {}: median {} epochs ({} censored)", s.activation, s.batch_size, s.median, s.censored);
    }
    for s in &report.speedups {
        println!("speedup {} over {} at batch {}: {:.3}", s.candidate, s.baseline, s.batch_size, s.median_ratio);
    }
    Manifest::new("benchmark", cfg, cfg.seed).finish(out, start)
}

fn load_model(dir: &Path, manifest: &mut Manifest) -> Result<Network> {
    let net = Network::load(dir)?;
    manifest.add_input(&dir.join(crate::nn::network::SPEC_FILE))?;
    manifest.add_input(&dir.join(crate::nn::network::WEIGHTS_FILE))?;
    Ok(net)
}

fn split_of(train: LabeledCloud, test: LabeledCloud, split: Split) -> LabeledCloud {
    match split {
        Split::Train => train,
        Split::Test => test,
    }
}

pub fn layer_betti(cfg: &LayerBettiRunConfig) -> Result<()> {
    let start = Instant::now();
    let mut manifest = Manifest::new("layer-betti", cfg, cfg.betti.seed);
    let net = load_model(&cfg.model, &mut manifest)?;
    let (train_data, test_data) = cfg.data.load()?;
    let mut data = split_of(train_data, test_data, cfg.split);
    if let Some(n) = cfg.samples {
        data = data.head(n);
    }
    let progression = layerwise_betti(&net, &data, cfg.class_label, &cfg.betti)?;
    let mut out = Outputs::create(&cfg.out)?;
    out.json("layer_betti.json", &progression)?;
    out.write("layer_betti.csv", &csv_bytes(|b| progression.write_csv(b))?)?;
    for l in &progression.layers {
        match (&l.betti, &l.error) {
            (Some(b), _) => println!("{:>3} {:<10} {:?}", l.layer, l.name, b.betti),
            (None, e) => println!("{:>3} {:<10} error: {}", l.layer, l.name, e.as_deref().unwrap_or("")),
        }
    }
    manifest.finish(out, start)
}

#[derive(Serialize)]
struct PruneTiming {
    latency_before: Option<f64>,
    latency_after: Option<f64>,
    scoring_secs: f64,
}

pub fn prune(cfg: &PruneRunConfig) -> Result<()> {
    let start = Instant::now();
    let mut manifest = Manifest::new("prune", cfg, cfg.train.seed);
    let net = load_model(&cfg.model, &mut manifest)?;
    let (train_data, test_data) = cfg.data.load()?;
    let t = Instant::now();
    let scores = filter_betti_scores(&net, &train_data, &cfg.score)?;
    let scoring_secs = t.elapsed().as_secs_f64();
    let threshold = match cfg.percentile {
        Some(p) => percentile_threshold(&scores, p)?,
        None => cfg.threshold,
    };
    let (mut pruned, mut report) = prune_filters(&net, &scores, threshold, cfg.score.sample_n, &test_data)?;
    if cfg.retrain_epochs > 0 {
        let tc = crate::nn::TrainConfig { epochs: cfg.retrain_epochs, ..cfg.train.clone() };
        pruned = train(&pruned, &train_data, &test_data, &tc)?.0;
        let after = evaluate(&pruned, &test_data)?;
        report.accuracy_after = after.accuracy;
        report.latency_after = Some(after.latency_per_1k);
    }
    let mut out = Outputs::create(&cfg.out)?;
    out.write("scores.csv", &csv_bytes(|b| write_scores_csv(&scores, b))?)?;
    out.json("prune_report.json", &report.without_timing())?;
    out.save_model("model", &pruned)?;
    out.json_untracked(
        "timing.json",
        &PruneTiming { latency_before: report.latency_before, latency_after: report.latency_after, scoring_secs },
    )?;
    println!(
        "threshold {threshold}: removed {} filters ({} unscored), params {} -> {}, accuracy {:.4} -> {:.4}",
        report.removed.len(),
        report.unscored.len(),
        report.params_before,
        report.params_after,
        report.accuracy_before,
        report.accuracy_after
    );
    manifest.finish(out, start)
}

#[derive(Serialize)]
struct EvaluationReport {
    network_id: String,
    split: Split,
    samples: usize,
    accuracy: f64,
    params: usize,
}

pub fn evaluate_cmd(cfg: &EvaluateRunConfig) -> Result<()> {
    let start = Instant::now();
    let mut manifest = Manifest::new("evaluate", cfg, 0);
    let net = load_model(&cfg.model, &mut manifest)?;
    let (train_data, test_data) = cfg.data.load()?;
    let data = split_of(train_data, test_data, cfg.split);
    let e = evaluate(&net, &data)?;
    let mut out = Outputs::create(&cfg.out)?;
    out.json(
        "evaluation.json",
        &EvaluationReport { network_id: network_id(&net), split: cfg.split, samples: data.len(), accuracy: e.accuracy, params: e.params },
    )?;
    out.json_untracked("timing.json", &serde_json::json!({ "latency_per_1k": e.latency_per_1k }))?;
    println!("accuracy {:.4}, {} params, {:.6} s per 1000 predictions", e.accuracy, e.params, e.latency_per_1k);
    manifest.finish(out, start)
}
