//! Betti scores of convolutional filters and structured removal of
//! high-scoring filters.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use ndarray::{s, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{LabeledCloud, SampleShape};
use crate::error::{Error, Result};
use crate::nn::{LayerSpec, Network};
use crate::pointcloud::{nearest_rank, PointCloud};
use crate::topology::{betti_profile, BettiConfig, BettiVector};

pub const DEFAULT_SAMPLE_N: usize = 256;
pub const DEFAULT_THRESHOLD: f64 = 300.0;
pub const LATENCY_BATCH: usize = 1000;
pub const LATENCY_PASSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub betti: BettiConfig,
    /// Inputs forwarded to build each filter's cloud (the first ones).
    pub sample_n: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { betti: BettiConfig::default(), sample_n: DEFAULT_SAMPLE_N }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterScore {
    /// Index of the conv layer in the network spec.
    pub layer: usize,
    pub filter: usize,
    /// Absent when the filter could not be scored; see `error`.
    pub betti: Option<BettiVector>,
    pub total: Option<usize>,
    pub eps: Option<f64>,
    pub m: usize,
    pub error: Option<String>,
}

impl FilterScore {
    pub fn is_scored(&self) -> bool {
        self.total.is_some()
    }
}

/// CSV with columns `layer,filter,b0,b1,b2,total,eps,m`; unscored filters
/// have empty numeric fields.
pub fn write_scores_csv<W: Write>(scores: &[FilterScore], mut w: W) -> Result<()> {
    let k = scores.iter().filter_map(|s| s.betti.as_ref()).map(|b| b.betti.len()).max().unwrap_or(3).max(3);
    let bs: Vec<String> = (0..k).map(|i| format!("b{i}")).collect();
    writeln!(w, "layer,filter,{},total,eps,m", bs.join(","))?;
    for s in scores {
        let betti: Vec<String> = (0..k)
            .map(|i| s.betti.as_ref().map(|b| b.get(i).to_string()).unwrap_or_default())
            .collect();
        let total = s.total.map(|t| t.to_string()).unwrap_or_default();
        let eps = s.eps.map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{},{}", s.layer, s.filter, betti.join(","), total, eps, s.m)?;
    }
    Ok(())
}

fn conv_layers(net: &Network) -> Vec<(usize, usize)> {
    net.spec()
        .layers
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match l {
            LayerSpec::Conv { out_channels, .. } => Some((i, *out_channels)),
            _ => None,
        })
        .collect()
}

/// Scores every filter of every conv layer by the total Betti number of
/// its feature maps over `cfg.sample_n` inputs.
pub fn filter_betti_scores(net: &Network, data: &LabeledCloud, cfg: &ScoreConfig) -> Result<Vec<FilterScore>> {
    cfg.betti.validate()?;
    if cfg.sample_n == 0 || data.is_empty() {
        return Err(Error::InvalidArgument("scoring needs at least one sample".into()));
    }
    let convs = conv_layers(net);
    if convs.is_empty() {
        return Err(Error::InvalidArgument("network has no conv layer".into()));
    }
    let x = data.features.slice(s![..cfg.sample_n.min(data.len()), ..]);
    let pass = net.forward(x)?;
    let jobs: Vec<(usize, usize, usize)> = convs
        .iter()
        .flat_map(|&(layer, filters)| {
            let positions = pass.layers[layer].ncols() / filters;
            (0..filters).map(move |f| (layer, f, positions))
        })
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(layer, filter, p)| {
            let maps = pass.layers[layer].slice(s![.., filter * p..(filter + 1) * p]).to_owned();
            match PointCloud::new(maps).and_then(|c| betti_profile(&c, &cfg.betti)) {
                Ok(prof) => FilterScore {
                    layer,
                    filter,
                    total: Some(prof.betti.total()),
                    eps: Some(prof.eps()),
                    betti: Some(prof.betti),
                    m: prof.subsample,
                    error: None,
                },
                Err(e) => FilterScore { layer, filter, betti: None, total: None, eps: None, m: 0, error: Some(e.to_string()) },
            }
        })
        .collect())
}

/// Nearest-rank percentile (`p` in [0, 100]) of the scored totals.
pub fn percentile_threshold(scores: &[FilterScore], p: f64) -> Result<f64> {
    let totals: Vec<f64> = scores.iter().filter_map(|s| s.total).map(|t| t as f64).collect();
    if totals.is_empty() {
        return Err(Error::InvalidArgument("no scored filters".into()));
    }
    nearest_rank(totals, p / 100.0)
}

/// Filters scoring strictly above `threshold`, grouped by layer. Unscored
/// filters are never selected. Fails if the scores miss a filter or would
/// empty a layer.
pub fn select_filters(net: &Network, scores: &[FilterScore], threshold: f64) -> Result<BTreeMap<usize, BTreeSet<usize>>> {
    let convs = conv_layers(net);
    let covered: BTreeSet<(usize, usize)> = scores.iter().map(|s| (s.layer, s.filter)).collect();
    for &(layer, filters) in &convs {
        if let Some(f) = (0..filters).find(|f| !covered.contains(&(layer, *f))) {
            return Err(Error::InvalidArgument(format!("no score for layer {layer} filter {f}")));
        }
    }
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for s in scores {
        if s.total.is_some_and(|t| t as f64 > threshold) {
            out.entry(s.layer).or_default().insert(s.filter);
        }
    }
    for &(layer, filters) in &convs {
        if out.get(&layer).is_some_and(|r| r.len() >= filters) {
            return Err(Error::WouldEmptyLayer { layer });
        }
    }
    Ok(out)
}

/// Removes the given conv output channels: their kernels and biases, and the
/// matching input slices of the next conv layer or, after a flatten, the
/// dense input rows of each removed channel's spatial positions.
pub fn remove_filters(net: &Network, removed: &BTreeMap<usize, BTreeSet<usize>>) -> Result<Network> {
    if removed.values().all(BTreeSet::is_empty) {
        return Ok(net.clone());
    }
    let mut spec = net.spec().clone();
    let shapes = spec.shapes()?;
    let mut arrays = net.param_arrays();
    // parameter array index of each parametrized layer's weight
    let mut slot = vec![None; spec.layers.len()];
    let mut next = 0;
    for (i, l) in spec.layers.iter().enumerate() {
        if matches!(l, LayerSpec::Dense { .. } | LayerSpec::Conv { .. } | LayerSpec::Output { .. }) {
            slot[i] = Some(next);
            next += 2;
        }
    }
    for (&layer, filters) in removed {
        if filters.is_empty() {
            continue;
        }
        let LayerSpec::Conv { out_channels, .. } = spec.layers.get(layer).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("layer {layer} does not exist"))
        })?
        else {
            return Err(Error::InvalidArgument(format!("layer {layer} is not a conv layer")));
        };
        if let Some(&f) = filters.iter().find(|&&f| f >= out_channels) {
            return Err(Error::InvalidArgument(format!("layer {layer} has no filter {f}")));
        }
        if filters.len() >= out_channels {
            return Err(Error::WouldEmptyLayer { layer });
        }
        let keep: Vec<usize> = (0..out_channels).filter(|f| !filters.contains(f)).collect();
        let w = slot[layer].expect("conv has parameters");
        arrays[w] = arrays[w].select(Axis(0), &keep);
        arrays[w + 1] = arrays[w + 1].select(Axis(0), &keep);
        if let LayerSpec::Conv { out_channels, .. } = &mut spec.layers[layer] {
            *out_channels = keep.len();
        }

        // Walk to the consumer, tracking the spatial extent per channel.
        let mut positions = 1;
        let mut flattened = false;
        let mut consumer = None;
        for (j, l) in spec.layers.iter().enumerate().skip(layer + 1) {
            match l {
                LayerSpec::MaxPool { .. } => {}
                LayerSpec::Flatten => {
                    flattened = true;
                    positions = match shapes[j - 1] {
                        SampleShape::Image { height, width, .. } => height * width,
                        SampleShape::Flat(_) => 1,
                    };
                }
                _ => {
                    consumer = Some(j);
                    break;
                }
            }
        }
        let j = consumer.expect("validated spec ends with an output layer");
        let cw = slot[j].expect("consumer has parameters");
        match &mut spec.layers[j] {
            LayerSpec::Conv { in_channels, .. } if !flattened => {
                arrays[cw] = arrays[cw].select(Axis(1), &keep);
                *in_channels = keep.len();
            }
            LayerSpec::Dense { input, .. } if flattened => {
                let rows = channel_rows(&keep, positions);
                arrays[cw] = arrays[cw].select(Axis(0), &rows);
                *input = rows.len();
            }
            LayerSpec::Output { .. } if flattened => {
                let rows = channel_rows(&keep, positions);
                arrays[cw] = arrays[cw].select(Axis(0), &rows);
            }
            other => {
                return Err(Error::InvalidSpec(format!("cannot prune conv layer {layer} feeding {}", other.name())));
            }
        }
    }
    Network::from_param_arrays(spec, arrays)
}

fn channel_rows(keep: &[usize], positions: usize) -> Vec<usize> {
    keep.iter().flat_map(|&c| c * positions..(c + 1) * positions).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Median seconds per 1000 single-threaded predictions.
    pub latency_per_1k: f64,
    pub params: usize,
}

/// Accuracy over the whole split, and the median time of five passes over
/// 1000 samples (cycled if the split is smaller) after one warm-up pass.
pub fn evaluate(net: &Network, data: &LabeledCloud) -> Result<Evaluation> {
    let accuracy = crate::nn::train::accuracy(net, data)?;
    let latency_per_1k = if data.is_empty() {
        0.0
    } else {
        let rows: Vec<usize> = (0..LATENCY_BATCH).map(|i| i % data.len()).collect();
        let x: Array2<f64> = data.features.select(Axis(0), &rows);
        net.predict(x.view())?;
        let mut times: Vec<f64> = (0..LATENCY_PASSES)
            .map(|_| {
                let t = Instant::now();
                let p = net.predict(x.view());
                std::hint::black_box(p).map(|_| t.elapsed().as_secs_f64())
            })
            .collect::<Result<_>>()?;
        times.sort_by(f64::total_cmp);
        times[LATENCY_PASSES / 2]
    };
    Ok(Evaluation { accuracy, latency_per_1k, params: net.param_count() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub sample_n: usize,
    pub scores: Vec<FilterScore>,
    /// `(layer, filter)` pairs in the original network's numbering.
    pub removed: Vec<(usize, usize)>,
    pub unscored: Vec<(usize, usize)>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub params_before: usize,
    pub params_after: usize,
    /// Seconds per 1000 predictions; left out of deterministic outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_before: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_after: Option<f64>,
}

impl PruneReport {
    /// Copy without timing fields, stable across reruns.
    pub fn without_timing(&self) -> Self {
        Self { latency_before: None, latency_after: None, ..self.clone() }
    }
}

/// Removes every filter with total Betti number above `threshold` and
/// reports accuracy, size and latency before and after on `eval_data`.
pub fn prune_filters(
    net: &Network,
    scores: &[FilterScore],
    threshold: f64,
    sample_n: usize,
    eval_data: &LabeledCloud,
) -> Result<(Network, PruneReport)> {
    let selected = select_filters(net, scores, threshold)?;
    let pruned = remove_filters(net, &selected)?;
    let before = evaluate(net, eval_data)?;
    let after = evaluate(&pruned, eval_data)?;
    let report = PruneReport {
        threshold,
        sample_n,
        scores: scores.to_vec(),
        removed: selected.iter().flat_map(|(&l, fs)| fs.iter().map(move |&f| (l, f))).collect(),
        unscored: scores.iter().filter(|s| !s.is_scored()).map(|s| (s.layer, s.filter)).collect(),
        accuracy_before: before.accuracy,
        accuracy_after: after.accuracy,
        params_before: before.params,
        params_after: after.params,
        latency_before: Some(before.latency_per_1k),
        latency_after: Some(after.latency_per_1k),
    };
    Ok((pruned, report))
}
