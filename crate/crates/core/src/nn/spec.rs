use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use crate::datasets::SampleShape;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    Softmax,
    /// Binary head: one logit `z`, probabilities `(1 - s(z), s(z))`.
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Dense { input: usize, output: usize, activation: ActivationKind },
    Conv { in_channels: usize, out_channels: usize, kernel: usize, stride: usize, activation: ActivationKind },
    MaxPool { size: usize },
    Flatten,
    Output { classes: usize, head: OutputHead },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Output { .. } => "output",
        }
    }

    pub fn activation(&self) -> Option<ActivationKind> {
        match self {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv { activation, .. } => Some(*activation),
            _ => None,
        }
    }

    pub fn set_activation(&mut self, kind: ActivationKind) {
        if let LayerSpec::Dense { activation, .. } | LayerSpec::Conv { activation, .. } = self {
            *activation = kind;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub input: SampleShape,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub init_seed: u64,
}

impl NetworkSpec {
    /// Output shape of every layer; fails unless adjacent shapes compose
    /// and exactly one output layer comes last.
    pub fn shapes(&self) -> Result<Vec<SampleShape>> {
        let bad = |i: usize, msg: String| Error::InvalidSpec(format!("layer {i}: {msg}"));
        if self.input.features() == 0 {
            return Err(Error::InvalidSpec("input has no features".into()));
        }
        let outputs = self.layers.iter().filter(|l| matches!(l, LayerSpec::Output { .. })).count();
        if outputs != 1 || !matches!(self.layers.last(), Some(LayerSpec::Output { .. })) {
            return Err(Error::InvalidSpec("exactly one output layer is required, and it must be last".into()));
        }
        let mut shape = self.input;
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(a) = layer.activation() {
                a.validate().map_err(|e| bad(i, e.to_string()))?;
            }
            shape = match (*layer, shape) {
                (LayerSpec::Dense { input, output, .. }, SampleShape::Flat(d)) => {
                    if input != d || output == 0 {
                        return Err(bad(i, format!("dense {input}->{output} after {d} features")));
                    }
                    SampleShape::Flat(output)
                }
                (LayerSpec::Conv { in_channels, out_channels, kernel, stride, .. }, SampleShape::Image { channels, height, width }) => {
                    if in_channels != channels || out_channels == 0 || kernel == 0 || stride == 0 {
                        return Err(bad(i, format!("conv expects {in_channels} channels, got {channels}")));
                    }
                    if kernel > height || kernel > width {
                        return Err(bad(i, format!("kernel {kernel} larger than {height}x{width} input")));
                    }
                    SampleShape::Image {
                        channels: out_channels,
                        height: (height - kernel) / stride + 1,
                        width: (width - kernel) / stride + 1,
                    }
                }
                (LayerSpec::MaxPool { size }, SampleShape::Image { channels, height, width }) => {
                    if size == 0 || size > height || size > width {
                        return Err(bad(i, format!("pool size {size} on {height}x{width} input")));
                    }
                    SampleShape::Image { channels, height: height / size, width: width / size }
                }
                (LayerSpec::Flatten, s) => SampleShape::Flat(s.features()),
                (LayerSpec::Output { classes, head }, SampleShape::Flat(_)) => {
                    if classes < 2 || (head == OutputHead::Sigmoid && classes != 2) {
                        return Err(bad(i, format!("{classes} classes with {head:?} head")));
                    }
                    SampleShape::Flat(classes)
                }
                (l, s) => return Err(bad(i, format!("{} cannot follow shape {s:?}", l.name()))),
            };
            shapes.push(shape);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes().map(|_| ())
    }

    pub fn classes(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Output { classes, .. }) => *classes,
            _ => 0,
        }
    }

    /// Indices of layers carrying an activation (dense and conv).
    pub fn hidden_layers(&self) -> Vec<usize> {
        self.layers.iter().enumerate().filter(|(_, l)| l.activation().is_some()).map(|(i, _)| i).collect()
    }

    /// Same architecture with every hidden activation replaced.
    pub fn with_activation(&self, kind: ActivationKind) -> Self {
        let mut spec = self.clone();
        for l in &mut spec.layers {
            l.set_activation(kind);
        }
        spec
    }

    /// Replaces the activation of the given hidden-layer positions (indices
    /// into [`NetworkSpec::hidden_layers`]).
    pub fn with_activation_at(&self, kind: ActivationKind, hidden_positions: &[usize]) -> Self {
        let mut spec = self.clone();
        let hidden = self.hidden_layers();
        for &p in hidden_positions {
            if let Some(&i) = hidden.get(p) {
                spec.layers[i].set_activation(kind);
            }
        }
        spec
    }
}

/// Multilayer perceptron with `depth` hidden layers of `width` units.
pub fn mlp(input: usize, depth: usize, width: usize, classes: usize, activation: ActivationKind, init_seed: u64) -> NetworkSpec {
    let mut layers = Vec::with_capacity(depth + 1);
    let mut prev = input;
    for _ in 0..depth {
        layers.push(LayerSpec::Dense { input: prev, output: width, activation });
        prev = width;
    }
    layers.push(LayerSpec::Output { classes, head: OutputHead::Softmax });
    NetworkSpec { input: SampleShape::Flat(input), layers, init_seed }
}

/// Nine hidden layers of 25 units, as used for the nine-ring and
/// nine-sphere data.
pub fn mlp_9x25(input: usize, classes: usize, activation: ActivationKind, init_seed: u64) -> NetworkSpec {
    mlp(input, 9, 25, classes, activation, init_seed)
}

/// conv 3x3 (16) -> pool 2 -> conv 3x3 (32) -> pool 2 -> flatten -> dense
/// 128 -> output.
pub fn small_cnn(input: SampleShape, classes: usize, activation: ActivationKind, init_seed: u64) -> NetworkSpec {
    let channels = match input {
        SampleShape::Image { channels, .. } => channels,
        SampleShape::Flat(_) => 1,
    };
    let conv_out = {
        let s = NetworkSpec {
            input,
            layers: vec![
                LayerSpec::Conv { in_channels: channels, out_channels: 16, kernel: 3, stride: 1, activation },
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Conv { in_channels: 16, out_channels: 32, kernel: 3, stride: 1, activation },
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Flatten,
                LayerSpec::Output { classes: 2, head: OutputHead::Softmax },
            ],
            init_seed,
        };
        s.shapes().ok().and_then(|sh| sh.get(4).map(|x| x.features())).unwrap_or(0)
    };
    NetworkSpec {
        input,
        layers: vec![
            LayerSpec::Conv { in_channels: channels, out_channels: 16, kernel: 3, stride: 1, activation },
            LayerSpec::MaxPool { size: 2 },
            LayerSpec::Conv { in_channels: 16, out_channels: 32, kernel: 3, stride: 1, activation },
            LayerSpec::MaxPool { size: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { input: conv_out, output: 128, activation },
            LayerSpec::Output { classes, head: OutputHead::Softmax },
        ],
        init_seed,
    }
}
