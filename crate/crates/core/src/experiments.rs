//! Layer-wise Betti progression and activation convergence benchmarks.

use std::io::Write;

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::LabeledCloud;
use crate::error::{Error, Result};
use crate::nn::{train, ActivationKind, LayerSpec, Network, NetworkSpec, Optimizer, TrainConfig};
use crate::pointcloud::PointCloud;
use crate::topology::{betti_profile, BettiConfig, BettiVector};

/// Hex SHA-256 over the spec JSON and every parameter's bits.
pub fn network_id(net: &Network) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(net.spec()).expect("spec serializes"));
    for s in net.param_slices() {
        for v in s {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBetti {
    /// 0 for the input, `i + 1` for spec layer `i`.
    pub layer: usize,
    pub name: String,
    pub betti: Option<BettiVector>,
    pub eps: Option<f64>,
    pub subsample: usize,
    pub simplices: usize,
    /// Set when the measurement failed; `betti` is then absent.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiProgression {
    pub network_id: String,
    pub class_label: usize,
    pub samples: usize,
    pub config: BettiConfig,
    pub layers: Vec<LayerBetti>,
}

impl BettiProgression {
    /// Last measured hidden layer, if any.
    pub fn final_hidden(&self) -> Option<&LayerBetti> {
        self.layers.iter().skip(1).last()
    }

    /// CSV: `layer,name,b0,...,b{K},eps,m,simplices,error`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.config.max_dim;
        let bs: Vec<String> = (0..=k).map(|i| format!("b{i}")).collect();
        writeln!(w, "layer,name,{},eps,m,simplices,error", bs.join(","))?;
        for l in &self.layers {
            let betti: Vec<String> = match &l.betti {
                Some(b) => b.betti.iter().map(usize::to_string).collect(),
                None => vec![String::new(); k + 1],
            };
            let eps = l.eps.map(|e| e.to_string()).unwrap_or_default();
            let err = l.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            writeln!(w, "{},{},{},{},{},{},{}", l.layer, l.name, betti.join(","), eps, l.subsample, l.simplices, err)?;
        }
        Ok(())
    }
}

fn measure(layer: usize, name: String, cloud: Result<PointCloud>, cfg: &BettiConfig) -> LayerBetti {
    match cloud.and_then(|c| betti_profile(&c, cfg)) {
        Ok(p) => LayerBetti {
            layer,
            name,
            eps: Some(p.eps()),
            betti: Some(p.betti),
            subsample: p.subsample,
            simplices: p.simplices,
            error: None,
        },
        Err(e) => LayerBetti { layer, name, betti: None, eps: None, subsample: 0, simplices: 0, error: Some(e.to_string()) },
    }
}

/// Betti numbers of one class's samples at the input and after every dense
/// or conv layer (post activation, flattened per sample). A layer whose
/// measurement fails carries an error marker instead of numbers.
pub fn layerwise_betti(net: &Network, data: &LabeledCloud, class_label: usize, cfg: &BettiConfig) -> Result<BettiProgression> {
    cfg.validate()?;
    let idx = data.class_indices(class_label);
    if idx.is_empty() {
        return Err(Error::InvalidArgument(format!("no samples with label {class_label}")));
    }
    let x = data.features.select(Axis(0), &idx);
    let pass = net.forward(x.view())?;
    let mut jobs: Vec<(usize, String, ndarray::Array2<f64>)> = vec![(0, "input".into(), x)];
    let mut counts = std::collections::HashMap::<&str, usize>::new();
    for (i, (spec, out)) in net.spec().layers.iter().zip(pass.layers).enumerate() {
        if matches!(spec, LayerSpec::Dense { .. } | LayerSpec::Conv { .. }) {
            let n = counts.entry(spec.name()).or_insert(0);
            *n += 1;
            jobs.push((i + 1, format!("{}{}", spec.name(), n), out));
        }
    }
    let layers = jobs
        .into_par_iter()
        .map(|(layer, name, a)| measure(layer, name, PointCloud::new(a), cfg))
        .collect();
    Ok(BettiProgression { network_id: network_id(net), class_label, samples: idx.len(), config: cfg.clone(), layers })
}

/// One contender in a benchmark: an activation, optionally confined to
/// some hidden layers (positions among the dense/conv layers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationChoice {
    pub kind: ActivationKind,
    #[serde(default)]
    pub layers: Option<Vec<usize>>,
}

impl ActivationChoice {
    pub fn everywhere(kind: ActivationKind) -> Self {
        Self { kind, layers: None }
    }

    pub fn label(&self) -> String {
        match &self.layers {
            None => self.kind.to_string(),
            Some(l) => {
                let l: Vec<String> = l.iter().map(usize::to_string).collect();
                format!("{}@{}", self.kind, l.join("+"))
            }
        }
    }

    pub fn apply(&self, spec: &NetworkSpec) -> NetworkSpec {
        match &self.layers {
            None => spec.with_activation(self.kind),
            Some(l) => spec.with_activation_at(self.kind, l),
        }
    }
}

/// Middle third of `depth` hidden layers, at least one layer.
pub fn middle_layers(depth: usize) -> Vec<usize> {
    let width = (depth / 3).max(1);
    let start = (depth - width) / 2;
    (start..start + width).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub seeds: Vec<u64>,
    pub threshold: f64,
    pub max_epochs: usize,
    pub batch_sizes: Vec<usize>,
    pub optimizer: Optimizer,
    pub lr: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            threshold: 0.99,
            max_epochs: 300,
            batch_sizes: vec![32],
            optimizer: Optimizer::Adam,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub activation: String,
    pub seed: u64,
    pub batch_size: usize,
    /// Censored at `max_epochs` when the threshold was never reached.
    pub epochs_to_threshold: usize,
    pub converged: bool,
    pub final_train_acc: f64,
    pub final_test_acc: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSummary {
    pub activation: String,
    pub batch_size: usize,
    pub median: f64,
    pub min: usize,
    pub max: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub baseline: String,
    pub candidate: String,
    pub batch_size: usize,
    /// median(baseline) / median(candidate)
    pub median_ratio: f64,
    /// baseline / candidate epochs per seed, in seed order.
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: BenchmarkConfig,
    pub runs: Vec<BenchmarkRun>,
    pub summaries: Vec<ActivationSummary>,
    pub speedups: Vec<Speedup>,
}

impl ConvergenceReport {
    pub fn speedup(&self, candidate: &str, batch_size: usize) -> Option<f64> {
        self.speedups.iter().find(|s| s.candidate == candidate && s.batch_size == batch_size).map(|s| s.median_ratio)
    }

    /// CSV, one row per run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "activation,seed,batch_size,epochs_to_threshold,converged,final_train_acc,final_test_acc,error")?;
        for r in &self.runs {
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.activation, r.seed, r.batch_size, r.epochs_to_threshold, r.converged, r.final_train_acc, r.final_test_acc, err
            )?;
        }
        Ok(())
    }
}

pub fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Trains one network per (activation, seed, batch size). The seed is both
/// the init seed and the shuffle seed, so the contenders for a seed start
/// from identically drawn weights. The first activation is the baseline.
pub fn convergence_benchmark(
    spec: &NetworkSpec,
    activations: &[ActivationChoice],
    train_data: &LabeledCloud,
    test_data: &LabeledCloud,
    cfg: &BenchmarkConfig,
) -> Result<ConvergenceReport> {
    if activations.len() < 2 {
        return Err(Error::InvalidArgument("at least two activations are needed".into()));
    }
    if cfg.seeds.len() < 3 {
        return Err(Error::InvalidArgument("at least three seeds are needed".into()));
    }
    if cfg.batch_sizes.is_empty() || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument("batch_sizes and max_epochs must be nonempty/positive".into()));
    }
    for a in activations {
        a.apply(spec).validate()?;
    }
    let mut jobs = Vec::new();
    for a in activations {
        for &b in &cfg.batch_sizes {
            for &s in &cfg.seeds {
                jobs.push((a, b, s));
            }
        }
    }
    let runs: Vec<BenchmarkRun> = jobs
        .into_par_iter()
        .map(|(choice, batch_size, seed)| {
            let mut s = choice.apply(spec);
            s.init_seed = seed;
            let tc = TrainConfig {
                optimizer: cfg.optimizer,
                lr: cfg.lr,
                batch_size,
                epochs: cfg.max_epochs,
                acc_threshold: cfg.threshold,
                stop_at_threshold: true,
                seed,
            };
            let base = BenchmarkRun {
                activation: choice.label(),
                seed,
                batch_size,
                epochs_to_threshold: cfg.max_epochs,
                converged: false,
                final_train_acc: 0.0,
                final_test_acc: 0.0,
                error: None,
            };
            match Network::new(s).and_then(|net| train(&net, train_data, test_data, &tc)) {
                Ok((_, log)) => {
                    let last = log.records.last();
                    BenchmarkRun {
                        epochs_to_threshold: log.epochs_to_threshold.unwrap_or(cfg.max_epochs),
                        converged: log.epochs_to_threshold.is_some(),
                        final_train_acc: last.map_or(0.0, |r| r.train_acc),
                        final_test_acc: last.map_or(0.0, |r| r.test_acc),
                        ..base
                    }
                }
                Err(e) => BenchmarkRun { error: Some(e.to_string()), ..base },
            }
        })
        .collect();

    // Runs are ordered by (activation, batch size, seed).
    let (nb, ns) = (cfg.batch_sizes.len(), cfg.seeds.len());
    let group = |a: usize, bi: usize| &runs[(a * nb + bi) * ns..(a * nb + bi + 1) * ns];
    let epochs = |a: usize, bi: usize| -> Vec<usize> { group(a, bi).iter().map(|r| r.epochs_to_threshold).collect() };
    let mut summaries = Vec::new();
    let mut speedups = Vec::new();
    for (bi, &b) in cfg.batch_sizes.iter().enumerate() {
        for (a, choice) in activations.iter().enumerate() {
            let e = epochs(a, bi);
            summaries.push(ActivationSummary {
                activation: choice.label(),
                batch_size: b,
                median: median(&e),
                min: *e.iter().min().expect("seeds nonempty"),
                max: *e.iter().max().expect("seeds nonempty"),
                censored: group(a, bi).iter().filter(|r| !r.converged).count(),
            });
        }
        let base = epochs(0, bi);
        for (a, choice) in activations.iter().enumerate().skip(1) {
            let cand = epochs(a, bi);
            speedups.push(Speedup {
                baseline: activations[0].label(),
                candidate: choice.label(),
                batch_size: b,
                median_ratio: median(&base) / median(&cand),
                per_seed: base.iter().zip(&cand).map(|(x, y)| *x as f64 / *y as f64).collect(),
            });
        }
    }
    Ok(ConvergenceReport { config: cfg.clone(), runs, summaries, speedups })
}
