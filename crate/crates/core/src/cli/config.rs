//! Run configurations: one strict JSON document per subcommand.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datasets::{self, LabeledCloud, Split};
use crate::error::{Error, Result};
use crate::experiments::{middle_layers, ActivationChoice};
use crate::nn::{mlp, small_cnn, ActivationKind, NetworkSpec, Optimizer, TrainConfig};
use crate::pruning::{ScoreConfig, DEFAULT_THRESHOLD};
use crate::topology::BettiConfig;

/// Environment variable naming the Fashion-MNIST directory.
pub const FASHION_MNIST_ENV: &str = "TOPONET_FASHION_MNIST_DIR";
pub const FASHION_MNIST_DEFAULT_DIR: &str = "data/fashion-mnist";

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

/// Parses `text` as a config of type `T`, or as a manifest whose `config`
/// member is one (its `command` must then equal `command`).
pub fn parse_config<T: DeserializeOwned>(text: &str, command: &str) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| config_err("", format!("invalid JSON: {e}")))?;
    let value = match value {
        serde_json::Value::Object(mut obj) if obj.contains_key("command") && obj.contains_key("config") => {
            let found = obj.get("command").and_then(|c| c.as_str()).unwrap_or_default().to_string();
            if found != command {
                return Err(config_err("command", format!("manifest is for `{found}`, not `{command}`")));
            }
            obj.remove("config").expect("checked above")
        }
        other => other,
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { "" } else { &path }, e.into_inner().to_string())
    })
}

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err("", format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text, command)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    NineRings,
    NineSpheres,
    FashionMnist,
    Cifar10,
    /// `train_images.tnnt`, `train_labels.tnnt`, `test_images.tnnt`,
    /// `test_labels.tnnt` in `dir`.
    Tensors,
    /// `train.csv` and `test.csv` as written by `gen-data`, in `dir`.
    Csv,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::NineRings => "nine-rings",
            DatasetKind::NineSpheres => "nine-spheres",
            DatasetKind::FashionMnist => "fashion-mnist",
            DatasetKind::Cifar10 => "cifar10",
            DatasetKind::Tensors => "tensors",
            DatasetKind::Csv => "csv",
        }
    }

    fn is_synthetic(self) -> bool {
        matches!(self, DatasetKind::NineRings | DatasetKind::NineSpheres)
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown dataset `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    /// Synthetic datasets only.
    pub n_train: usize,
    pub n_test: usize,
    /// Generation seed of synthetic datasets.
    pub seed: u64,
    /// Source directory of file-backed datasets.
    pub dir: Option<PathBuf>,
    /// Keep only the first rows of each split.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::NineRings,
            n_train: 16_000,
            n_test: 2_000,
            seed: 0,
            dir: None,
            train_limit: None,
            test_limit: None,
        }
    }
}

impl DataConfig {
    /// Fills in the directory a file-backed dataset will be read from.
    pub fn resolve(&mut self) -> Result<()> {
        if self.dir.is_some() || self.dataset.is_synthetic() {
            return Ok(());
        }
        match self.dataset {
            DatasetKind::FashionMnist => {
                let dir = std::env::var_os(FASHION_MNIST_ENV).map(PathBuf::from);
                self.dir = Some(dir.unwrap_or_else(|| PathBuf::from(FASHION_MNIST_DEFAULT_DIR)));
                Ok(())
            }
            other => Err(config_err("data.dir", format!("required for dataset `{}`", other.name()))),
        }
    }

    pub fn load(&self) -> Result<(LabeledCloud, LabeledCloud)> {
        let dir = || self.dir.clone().unwrap_or_default();
        let (train, test) = match self.dataset {
            DatasetKind::NineRings => datasets::gen_nine_rings(self.n_train, self.n_test, self.seed)?,
            DatasetKind::NineSpheres => datasets::gen_nine_spheres(self.n_train, self.n_test, self.seed)?,
            DatasetKind::FashionMnist => {
                let d = dir();
                (
                    datasets::load_idx(d.join("train-images-idx3-ubyte"), d.join("train-labels-idx1-ubyte"), Split::Train)?,
                    datasets::load_idx(d.join("t10k-images-idx3-ubyte"), d.join("t10k-labels-idx1-ubyte"), Split::Test)?,
                )
            }
            DatasetKind::Cifar10 => datasets::load_cifar10(dir())?,
            DatasetKind::Tensors => {
                let d = dir();
                (
                    datasets::load_tensor_dataset(d.join("train_images.tnnt"), d.join("train_labels.tnnt"), Split::Train)?,
                    datasets::load_tensor_dataset(d.join("test_images.tnnt"), d.join("test_labels.tnnt"), Split::Test)?,
                )
            }
            DatasetKind::Csv => {
                let d = dir();
                let read = |name: &str, split| -> Result<LabeledCloud> {
                    let f = std::fs::File::open(d.join(name))?;
                    LabeledCloud::read_csv(std::io::BufReader::new(f), split)
                };
                let (mut train, mut test) = (read("train.csv", Split::Train)?, read("test.csv", Split::Test)?);
                let classes = train.num_classes.max(test.num_classes);
                train.num_classes = classes;
                test.num_classes = classes;
                (train, test)
            }
        };
        let train = match self.train_limit {
            Some(n) => train.head(n),
            None => train,
        };
        let test = match self.test_limit {
            Some(n) => test.head(n),
            None => test,
        };
        if train.is_empty() || test.is_empty() {
            return Err(config_err("data", "a split is empty"));
        }
        Ok((train, test))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    /// `depth` dense layers of `width` units.
    Mlp,
    /// Two conv/pool stages, one dense layer; image datasets only.
    Cnn,
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Arch::Mlp),
            "cnn" => Ok(Arch::Cnn),
            other => Err(Error::Parse(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub depth: usize,
    pub width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { arch: Arch::Mlp, depth: 9, width: 25 }
    }
}

impl ModelConfig {
    pub fn build(&self, data: &LabeledCloud, activation: ActivationKind, seed: u64) -> Result<NetworkSpec> {
        let spec = match self.arch {
            Arch::Mlp => {
                if self.depth == 0 || self.width == 0 {
                    return Err(config_err("model", "depth and width must be positive"));
                }
                mlp(data.shape.features(), self.depth, self.width, data.num_classes, activation, seed)
            }
            Arch::Cnn => small_cnn(data.shape, data.num_classes, activation, seed),
        };
        spec.validate().map_err(|e| config_err("model", e.to_string()))?;
        Ok(spec)
    }
}

fn parse_activation(path: &str, s: &str) -> Result<ActivationKind> {
    s.parse::<ActivationKind>().map_err(|e| config_err(path, e.to_string()))
}

/// `all`, `middle` (middle third of the hidden layers) or a comma-separated
/// list of hidden-layer positions.
fn parse_placement(path: &str, s: &str, hidden: usize) -> Result<Option<Vec<usize>>> {
    match s {
        "all" => Ok(None),
        "middle" => Ok(Some(middle_layers(hidden))),
        list => {
            let layers = list
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| config_err(path, format!("expected `all`, `middle` or positions, got `{list}`")))?;
            if let Some(&bad) = layers.iter().find(|&&p| p >= hidden) {
                return Err(config_err(path, format!("position {bad} beyond the {hidden} hidden layers")));
            }
            Ok(Some(layers))
        }
    }
}

fn check_betti(path: &str, cfg: &BettiConfig) -> Result<()> {
    cfg.validate().map_err(|e| config_err(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub dataset: DatasetKind,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        let d = DataConfig::default();
        Self { dataset: d.dataset, n_train: d.n_train, n_test: d.n_test, seed: 0, out: PathBuf::from("out/gen-data") }
    }
}

impl GenDataConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dataset.is_synthetic() {
            return Err(config_err("dataset", "gen-data supports nine-rings and nine-spheres"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BettiRunConfig {
    /// Point-cloud CSV (one point per row) or tensor file `[n, ...]`.
    pub input: PathBuf,
    /// Treat `input` as a labeled `gen-data` CSV and measure this class.
    pub label: Option<usize>,
    pub betti: BettiConfig,
    pub out: PathBuf,
}

impl Default for BettiRunConfig {
    fn default() -> Self {
        Self { input: PathBuf::new(), label: None, betti: BettiConfig::default(), out: PathBuf::from("out/betti") }
    }
}

impl BettiRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(config_err("input", "an input file is required"));
        }
        check_betti("betti", &self.betti)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub activation: String,
    pub placement: String,
    /// `train.seed` also seeds the weight initialization.
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            activation: "relu".into(),
            placement: "all".into(),
            train: TrainConfig::default(),
            out: PathBuf::from("out/train"),
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        parse_activation("activation", &self.activation)?;
        self.train.validate().map_err(|e| config_err("train", e.to_string()))
    }

    /// Relu network with `activation` at `placement`.
    pub fn spec(&self, data: &LabeledCloud) -> Result<NetworkSpec> {
        let kind = parse_activation("activation", &self.activation)?;
        let base = self.model.build(data, ActivationKind::Relu, self.train.seed)?;
        let layers = parse_placement("placement", &self.placement, base.hidden_layers().len())?;
        Ok(ActivationChoice { kind, layers }.apply(&base))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkRunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    /// The first entry is the baseline and applies to every hidden layer.
    pub activations: Vec<String>,
    /// Where the other activations replace relu; see `train`.
    pub placement: String,
    /// Runs use seeds `seed, seed + 1, ..., seed + seeds - 1`.
    pub seed: u64,
    pub seeds: usize,
    pub threshold: f64,
    pub max_epochs: usize,
    pub batch_sizes: Vec<usize>,
    pub optimizer: Optimizer,
    pub lr: f64,
    pub out: PathBuf,
}

impl Default for BenchmarkRunConfig {
    fn default() -> Self {
        let b = crate::experiments::BenchmarkConfig::default();
        Self {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            activations: vec!["relu".into(), "stacked-sine".into()],
            placement: "middle".into(),
            seed: 0,
            seeds: b.seeds.len(),
            threshold: b.threshold,
            max_epochs: b.max_epochs,
            batch_sizes: b.batch_sizes,
            optimizer: b.optimizer,
            lr: b.lr,
            out: PathBuf::from("out/benchmark"),
        }
    }
}

impl BenchmarkRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.activations.len() < 2 {
            return Err(config_err("activations", "at least two activations are needed"));
        }
        for (i, a) in self.activations.iter().enumerate() {
            parse_activation(&format!("activations[{i}]"), a)?;
        }
        if self.seeds < 3 {
            return Err(config_err("seeds", "at least three seeds are needed"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(config_err("threshold", "must lie in [0, 1]"));
        }
        if self.max_epochs == 0 {
            return Err(config_err("max_epochs", "must be positive"));
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err(config_err("batch_sizes", "must be nonempty and positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(config_err("lr", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn choices(&self, hidden: usize) -> Result<Vec<ActivationChoice>> {
        let layers = parse_placement("placement", &self.placement, hidden)?;
        self.activations
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let kind = parse_activation(&format!("activations[{i}]"), a)?;
                Ok(ActivationChoice { kind, layers: if i == 0 { None } else { layers.clone() } })
            })
            .collect()
    }

    pub fn benchmark_config(&self) -> crate::experiments::BenchmarkConfig {
        crate::experiments::BenchmarkConfig {
            seeds: (0..self.seeds as u64).map(|i| self.seed.wrapping_add(i)).collect(),
            threshold: self.threshold,
            max_epochs: self.max_epochs,
            batch_sizes: self.batch_sizes.clone(),
            optimizer: self.optimizer,
            lr: self.lr,
        }
    }
}

fn check_model(model: &Path) -> Result<()> {
    if model.as_os_str().is_empty() {
        return Err(config_err("model", "a model directory is required"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerBettiRunConfig {
    /// Directory written by `train` (`model/`).
    pub model: PathBuf,
    pub data: DataConfig,
    pub split: Split,
    pub class_label: usize,
    /// Use only the first samples of the split.
    pub samples: Option<usize>,
    pub betti: BettiConfig,
    pub out: PathBuf,
}

impl Default for LayerBettiRunConfig {
    fn default() -> Self {
        Self {
            model: PathBuf::new(),
            data: DataConfig::default(),
            split: Split::Test,
            class_label: 0,
            samples: None,
            betti: BettiConfig::default(),
            out: PathBuf::from("out/layer-betti"),
        }
    }
}

impl LayerBettiRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_model(&self.model)?;
        check_betti("betti", &self.betti)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneRunConfig {
    pub model: PathBuf,
    /// Scores come from the training split, accuracy from the test split.
    pub data: DataConfig,
    pub threshold: f64,
    /// Overrides `threshold` with this percentile of the filter scores.
    pub percentile: Option<f64>,
    pub score: ScoreConfig,
    /// Fine-tuning epochs after removal (0: none).
    pub retrain_epochs: usize,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl Default for PruneRunConfig {
    fn default() -> Self {
        Self {
            model: PathBuf::new(),
            data: DataConfig { dataset: DatasetKind::FashionMnist, ..DataConfig::default() },
            threshold: DEFAULT_THRESHOLD,
            percentile: None,
            score: ScoreConfig::default(),
            retrain_epochs: 0,
            train: TrainConfig::default(),
            out: PathBuf::from("out/prune"),
        }
    }
}

impl PruneRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_model(&self.model)?;
        if self.threshold.is_nan() {
            return Err(config_err("threshold", "must be a number"));
        }
        if let Some(p) = self.percentile {
            if !(p > 0.0 && p <= 100.0) {
                return Err(config_err("percentile", format!("{p} outside (0, 100]")));
            }
        }
        if self.score.sample_n == 0 {
            return Err(config_err("score.sample_n", "must be positive"));
        }
        check_betti("score.betti", &self.score.betti)?;
        self.train.validate().map_err(|e| config_err("train", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateRunConfig {
    pub model: PathBuf,
    pub data: DataConfig,
    pub split: Split,
    pub out: PathBuf,
}

impl Default for EvaluateRunConfig {
    fn default() -> Self {
        Self { model: PathBuf::new(), data: DataConfig::default(), split: Split::Test, out: PathBuf::from("out/evaluate") }
    }
}

impl EvaluateRunConfig {
    pub fn validate(&self) -> Result<()> {
        check_model(&self.model)
    }
}
