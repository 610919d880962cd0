//! Ingest of pre-decoded images stored in the portable tensor format (for
//! example a cat-vs-dog set converted by an external tool).

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ndarray::Array2;

use super::{LabeledCloud, SampleShape, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Builds a dataset from an image tensor `[N, H, W]` or `[N, C, H, W]` and a
/// label tensor `[N]`. Three-channel images are converted to grayscale.
/// Pixel values above 1 are taken as 8-bit and divided by 255.
pub fn dataset_from_tensors(images: &Tensor, labels: &Tensor, split: Split) -> Result<LabeledCloud> {
    let (n, c, h, w) = match images.dims.as_slice() {
        &[n, h, w] => (n, 1, h, w),
        &[n, c, h, w] if c == 1 || c == 3 => (n, c, h, w),
        dims => return Err(Error::ShapeMismatch(format!("image tensor dims {dims:?}"))),
    };
    if labels.dims != [n] {
        return Err(Error::CountMismatch(format!("{n} images but label dims {:?}", labels.dims)));
    }
    let max = images.data.iter().copied().fold(0f32, f32::max);
    if images.data.iter().any(|v| !v.is_finite() || *v < 0.0) || max > 255.0 {
        return Err(Error::InvalidArgument("pixel values must lie in [0, 1] or [0, 255]".into()));
    }
    let scale = if max > 1.0 { 1.0 / 255.0 } else { 1.0 };
    let plane = h * w;
    let mut features = Vec::with_capacity(n * plane);
    for s in 0..n {
        let base = s * c * plane;
        for p in 0..plane {
            let v = if c == 3 {
                0.299 * images.data[base + p] as f64
                    + 0.587 * images.data[base + plane + p] as f64
                    + 0.114 * images.data[base + 2 * plane + p] as f64
            } else {
                images.data[base + p] as f64
            };
            features.push((v * scale).clamp(0.0, 1.0));
        }
    }
    let mut label_ids = Vec::with_capacity(n);
    for &l in &labels.data {
        if l < 0.0 || l.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!("label {l} is not a class id")));
        }
        label_ids.push(l as usize);
    }
    let classes = label_ids.iter().max().map_or(0, |m| m + 1);
    let features = Array2::from_shape_vec((n, plane), features).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LabeledCloud::new(features, label_ids, classes, split, SampleShape::Image { channels: 1, height: h, width: w })
}

pub fn load_tensor_dataset(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    split: Split,
) -> Result<LabeledCloud> {
    let images = Tensor::read(BufReader::new(File::open(images_path)?))?;
    let labels = Tensor::read(BufReader::new(File::open(labels_path)?))?;
    dataset_from_tensors(&images, &labels, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_bytes_become_gray_unit() {
        // One 1x2 RGB image: a red pixel and a white pixel.
        let images = Tensor::new(vec![1, 3, 1, 2], vec![255.0, 255.0, 0.0, 255.0, 0.0, 255.0]).unwrap();
        let labels = Tensor::new(vec![1], vec![1.0]).unwrap();
        let ds = dataset_from_tensors(&images, &labels, Split::Train).unwrap();
        assert!((ds.features[[0, 0]] - 0.299).abs() < 1e-7);
        assert!((ds.features[[0, 1]] - 1.0).abs() < 1e-7);
        assert_eq!(ds.num_classes, 2);
    }

    #[test]
    fn rejects_bad_labels() {
        let images = Tensor::new(vec![2, 1, 1], vec![0.0, 1.0]).unwrap();
        assert!(dataset_from_tensors(&images, &Tensor::new(vec![1], vec![0.0]).unwrap(), Split::Train).is_err());
        assert!(dataset_from_tensors(&images, &Tensor::new(vec![2], vec![0.5, 1.0]).unwrap(), Split::Train).is_err());
    }
}
