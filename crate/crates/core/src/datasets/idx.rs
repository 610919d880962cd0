//! IDX files as used by MNIST and fashion-MNIST.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{byte_to_unit, LabeledCloud, SampleShape, Split};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("{what} header")))
}

/// Parses an IDX image file and label file already in memory.
pub fn parse_idx(images: &[u8], labels: &[u8], split: Split) -> Result<LabeledCloud> {
    let magic = be_u32(images, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic { found: magic, expected: IMAGES_MAGIC });
    }
    let magic = be_u32(labels, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic { found: magic, expected: LABELS_MAGIC });
    }
    let n = be_u32(images, 4, "images")? as usize;
    let rows = be_u32(images, 8, "images")? as usize;
    let cols = be_u32(images, 12, "images")? as usize;
    let n_labels = be_u32(labels, 4, "labels")? as usize;
    if n != n_labels {
        return Err(Error::CountMismatch(format!("{n} images but {n_labels} labels")));
    }
    let d = rows * cols;
    let pixels = images
        .get(16..16 + n * d)
        .ok_or_else(|| Error::TruncatedFile(format!("expected {} pixel bytes", n * d)))?;
    let label_bytes =
        labels.get(8..8 + n).ok_or_else(|| Error::TruncatedFile(format!("expected {n} label bytes")))?;
    let features = Array2::from_shape_vec((n, d), pixels.iter().map(|&b| byte_to_unit(b)).collect())
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    LabeledCloud::new(features, labels, classes, split, SampleShape::Image { channels: 1, height: rows, width: cols })
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, split: Split) -> Result<LabeledCloud> {
    parse_idx(&fs::read(images_path)?, &fs::read(labels_path)?, split)
}

/// Serializes images (values in `[0, 1]`, rounded to bytes) and labels.
pub fn encode_idx(images: &[Vec<u8>], rows: usize, cols: usize, labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    img.extend(IMAGES_MAGIC.to_be_bytes());
    img.extend((images.len() as u32).to_be_bytes());
    img.extend((rows as u32).to_be_bytes());
    img.extend((cols as u32).to_be_bytes());
    for im in images {
        img.extend_from_slice(im);
    }
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend(LABELS_MAGIC.to_be_bytes());
    lab.extend((labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    (img, lab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        // Two 2x3 images with hand-picked bytes.
        let images = vec![vec![0, 255, 51, 102, 153, 204], vec![1, 2, 3, 4, 5, 6]];
        encode_idx(&images, 2, 3, &[7, 3])
    }

    #[test]
    fn exact_pixel_roundtrip() {
        let (img, lab) = fixture();
        assert_eq!(&img[..4], &[0, 0, 8, 3]);
        let ds = parse_idx(&img, &lab, Split::Train).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.shape, SampleShape::Image { channels: 1, height: 2, width: 3 });
        assert_eq!(ds.labels, vec![7, 3]);
        assert_eq!(ds.features[[0, 1]], 1.0);
        assert_eq!(ds.features[[0, 2]], 0.2);
        assert_eq!(ds.features[[1, 5]], 6.0 / 255.0);
        for (i, &b) in [0u8, 255, 51, 102, 153, 204].iter().enumerate() {
            assert_eq!((ds.features[[0, i]] * 255.0).round() as u8, b);
        }
        assert!(ds.features.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn wrong_magic() {
        let (mut img, lab) = fixture();
        img[3] = 0x01;
        assert!(matches!(parse_idx(&img, &lab, Split::Train), Err(Error::BadMagic { found: 0x801, .. })));
        let (img, mut lab) = fixture();
        lab[3] = 0x03;
        assert!(matches!(parse_idx(&img, &lab, Split::Train), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_and_mismatched() {
        let (img, lab) = fixture();
        assert!(matches!(parse_idx(&img[..img.len() - 1], &lab, Split::Train), Err(Error::TruncatedFile(_))));
        assert!(matches!(parse_idx(&img[..10], &lab, Split::Train), Err(Error::TruncatedFile(_))));
        let (_, lab3) = encode_idx(&[], 2, 3, &[1, 2, 3]);
        assert!(matches!(parse_idx(&img, &lab3, Split::Train), Err(Error::CountMismatch(_))));
    }
}
