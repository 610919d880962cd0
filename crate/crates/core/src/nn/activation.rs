//! Pointwise activations, including the stacked-sine function.
//!
//! Stacked sine with segment width `c` (default `3π/4`): for `x >= 0`,
//! `k = floor(x / c)` and `y = k sin(c) + sin(x - k c)`; for `x < 0`,
//! `y = 0`. Each segment repeats the rising and falling arc of the sine
//! between `0` and `c`, lifted by `sin(c)` per segment, so the function
//! climbs like a ReLU while folding every segment onto overlapping values.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEGMENT_WIDTH: f64 = 3.0 * PI / 4.0;
pub const DEFAULT_LEAK: f64 = 0.01;

fn default_width() -> f64 {
    DEFAULT_SEGMENT_WIDTH
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationKind {
    #[default]
    Relu,
    LeakyRelu { alpha: f64 },
    Sigmoid,
    Tanh,
    StackedSine {
        #[serde(default = "default_width")]
        width: f64,
    },
}

impl ActivationKind {
    pub fn stacked_sine() -> Self {
        ActivationKind::StackedSine { width: DEFAULT_SEGMENT_WIDTH }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(Error::InvalidArgument(format!("leaky_relu alpha {alpha} outside (0, 1)")))
            }
            ActivationKind::StackedSine { width } if !(width > 0.0 && width.is_finite()) => {
                Err(Error::InvalidArgument(format!("stacked_sine width {width} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Whether He (rather than Xavier) initialization suits this kind.
    pub fn is_rectifier_like(&self) -> bool {
        !matches!(self, ActivationKind::Sigmoid | ActivationKind::Tanh)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::LeakyRelu { alpha } => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::StackedSine { width } => {
                if x < 0.0 {
                    0.0
                } else {
                    let k = (x / width).floor();
                    k * width.sin() + (x - k * width).sin()
                }
            }
        }
    }

    /// Derivative, taking the right derivative at kinks and knots (so the
    /// stacked sine has slope 1 at `x = 0` and at every `x = k c`) except
    /// for the ReLU kink at 0, whose subgradient is 0.
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => 1.0 - x.tanh().powi(2),
            ActivationKind::StackedSine { width } => {
                if x < 0.0 {
                    0.0
                } else {
                    let k = (x / width).floor();
                    (x - k * width).cos()
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ActivationKind::Relu => write!(f, "relu"),
            ActivationKind::LeakyRelu { alpha } => write!(f, "leaky-relu:{alpha}"),
            ActivationKind::Sigmoid => write!(f, "sigmoid"),
            ActivationKind::Tanh => write!(f, "tanh"),
            ActivationKind::StackedSine { width } if width == DEFAULT_SEGMENT_WIDTH => write!(f, "stacked-sine"),
            ActivationKind::StackedSine { width } => write!(f, "stacked-sine:{width}"),
        }
    }
}

/// Accepts `relu`, `sigmoid`, `tanh`, `leaky-relu[:alpha]` and
/// `stacked-sine[:width]`; underscores and dashes are interchangeable.
impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v = p.parse::<f64>().map_err(|e| Error::Parse(format!("activation parameter `{p}`: {e}")))?;
                (n.to_string(), Some(v))
            }
            None => (s.clone(), None),
        };
        let kind = match (name.as_str(), param) {
            ("relu", None) => ActivationKind::Relu,
            ("sigmoid", None) => ActivationKind::Sigmoid,
            ("tanh", None) => ActivationKind::Tanh,
            ("leaky-relu", alpha) => ActivationKind::LeakyRelu { alpha: alpha.unwrap_or(DEFAULT_LEAK) },
            ("stacked-sine", width) => ActivationKind::StackedSine { width: width.unwrap_or(DEFAULT_SEGMENT_WIDTH) },
            _ => return Err(Error::Parse(format!("unknown activation `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}
