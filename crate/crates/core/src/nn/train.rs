use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::datasets::LabeledCloud;
use crate::error::{Error, Result};
use crate::rng;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::Parse(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub acc_threshold: f64,
    /// Stop after the first epoch reaching `acc_threshold`.
    pub stop_at_threshold: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            lr: 1e-3,
            batch_size: 32,
            epochs: 50,
            acc_threshold: 0.99,
            stop_at_threshold: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr must be finite and >= 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.acc_threshold) {
            return Err(Error::InvalidArgument(format!("acc_threshold {} outside [0, 1]", self.acc_threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy over the epoch's mini-batches, measured as they were seen.
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
    pub epochs_to_threshold: Option<usize>,
}

pub fn accuracy(net: &Network, data: &LabeledCloud) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = net.predict(data.features.view())?;
    Ok(pred.iter().zip(&data.labels).filter(|(p, l)| p == l).count() as f64 / data.len() as f64)
}

enum State {
    Sgd,
    Adam { m: Vec<Vec<f64>>, v: Vec<Vec<f64>>, t: i32 },
}

impl State {
    fn new(opt: Optimizer, net: &Network) -> Self {
        match opt {
            Optimizer::Sgd => State::Sgd,
            Optimizer::Adam => {
                let zeros: Vec<Vec<f64>> = net.param_slices().iter().map(|s| vec![0.0; s.len()]).collect();
                State::Adam { m: zeros.clone(), v: zeros, t: 0 }
            }
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[Vec<f64>], lr: f64) {
        match self {
            State::Sgd => {
                for (p, g) in net.param_slices_mut().into_iter().zip(grads) {
                    for (p, g) in p.iter_mut().zip(g) {
                        *p -= lr * g;
                    }
                }
            }
            State::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for (((p, g), m), v) in net.param_slices_mut().into_iter().zip(grads).zip(m).zip(v) {
                    for i in 0..p.len() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Mini-batch training on a copy of `net`. Batches are reshuffled every
/// epoch from the `shuffle` stream of `cfg.seed`.
pub fn train(net: &Network, train: &LabeledCloud, test: &LabeledCloud, cfg: &TrainConfig) -> Result<(Network, TrainLog)> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("training and test sets must be nonempty".into()));
    }
    for data in [train, test] {
        if data.features.ncols() != net.input_features() {
            return Err(Error::ShapeMismatch(format!(
                "{} split has {} features, network expects {}",
                data.split.name(),
                data.features.ncols(),
                net.input_features()
            )));
        }
        if let Some(&l) = data.labels.iter().find(|&&l| l >= net.classes()) {
            return Err(Error::BadLabel { label: l, max: net.classes() - 1 });
        }
    }
    let mut net = net.clone();
    let mut state = State::new(cfg.optimizer, &net);
    let mut rng = rng::stream(cfg.seed, "shuffle");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(cfg.batch_size) {
            let x = train.features.select(Axis(0), batch);
            let labels: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let (loss, grads, right) = net.loss_and_grad(x.view(), &labels)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            correct += right;
            state.step(&mut net, &grads, cfg.lr);
        }
        let train_acc = correct as f64 / train.len() as f64;
        let record = TrainRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc,
            test_acc: accuracy(&net, test)?,
        };
        log.records.push(record);
        if log.epochs_to_threshold.is_none() && train_acc >= cfg.acc_threshold {
            log.epochs_to_threshold = Some(epoch);
            if cfg.stop_at_threshold {
                break;
            }
        }
    }
    Ok((net, log))
}
