//! Labeled datasets: synthetic generators and loaders for IDX, CIFAR-10
//! binary batches and pre-decoded image tensors.

pub mod cifar;
pub mod idx;
pub mod synthetic;
pub mod tensors;

use std::io::Write;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

pub use cifar::load_cifar10;
pub use idx::load_idx;
pub use synthetic::{gen_nine_rings, gen_nine_spheres};
pub use tensors::load_tensor_dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Layout of one sample's feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleShape {
    Flat(usize),
    /// Channel-major `C x H x W`.
    Image { channels: usize, height: usize, width: usize },
}

impl SampleShape {
    pub fn features(self) -> usize {
        match self {
            SampleShape::Flat(d) => d,
            SampleShape::Image { channels, height, width } => channels * height * width,
        }
    }
}

/// Samples as rows of `features` with one class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
    pub shape: SampleShape,
}

impl LabeledCloud {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        split: Split,
        shape: SampleShape,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::CountMismatch(format!(
                "{} samples but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() != shape.features() {
            return Err(Error::ShapeMismatch(format!(
                "{} features per sample, shape {shape:?} needs {}",
                features.ncols(),
                shape.features()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::BadLabel { label: l, max: num_classes.saturating_sub(1) });
        }
        Ok(Self { features, labels, num_classes, split, shape })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_indices(&self, label: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidCount(format!("index {i} out of range for {} samples", self.len())));
        }
        Ok(Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            split: self.split,
            shape: self.shape,
        })
    }

    /// First `n` samples (all of them if fewer).
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx).expect("indices in range")
    }

    /// Samples of one class as a point cloud.
    pub fn class_cloud(&self, label: usize) -> Result<PointCloud> {
        let idx = self.class_indices(label);
        if idx.is_empty() {
            return Err(Error::InvalidArgument(format!("no samples with label {label}")));
        }
        PointCloud::new(self.features.select(Axis(0), &idx))
    }

    pub fn cloud(&self) -> Result<PointCloud> {
        PointCloud::new(self.features.clone())
    }

    /// CSV with header `x0,...,x{d-1},label`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.features.ncols()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},label", header.join(","))?;
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{label}", cells.join(","))?;
        }
        Ok(())
    }

    /// Reads the format written by [`LabeledCloud::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(r: R, split: Split) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let (label, coords) = fields.split_last().ok_or_else(|| Error::Parse(format!("line {}", i + 1)))?;
            labels.push(label.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?);
            rows.push(
                coords
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            );
        }
        let cloud = PointCloud::from_rows(&rows)?;
        let d = cloud.dim();
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(cloud.into_inner(), labels, classes, split, SampleShape::Flat(d))
    }
}

/// Maps `[0, 255]` bytes to `[0, 1]`.
pub(crate) fn byte_to_unit(b: u8) -> f64 {
    b as f64 / 255.0
}
