//! CIFAR-10 binary batches: 3073-byte records of one label byte followed
//! by 1024 red, 1024 green and 1024 blue pixels.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{LabeledCloud, SampleShape, Split};
use crate::error::{Error, Result};

pub const RECORD_BYTES: usize = 3073;
const PLANE: usize = 1024;
pub const TRAIN_BATCHES: [&str; 5] =
    ["data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"];
pub const TEST_BATCH: &str = "test_batch.bin";

/// Grayscale (0.299 R + 0.587 G + 0.114 B) in `[0, 1]`, 32 x 32.
pub fn parse_cifar_records(bytes: &[u8], split: Split) -> Result<LabeledCloud> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(Error::TruncatedFile(format!(
            "{} bytes is not a whole number of {RECORD_BYTES}-byte records",
            bytes.len()
        )));
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut features = Vec::with_capacity(n * PLANE);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(RECORD_BYTES) {
        let label = rec[0] as usize;
        if label > 9 {
            return Err(Error::BadLabel { label, max: 9 });
        }
        labels.push(label);
        let (r, g, b) = (&rec[1..1 + PLANE], &rec[1 + PLANE..1 + 2 * PLANE], &rec[1 + 2 * PLANE..]);
        for i in 0..PLANE {
            let y = 0.299 * r[i] as f64 + 0.587 * g[i] as f64 + 0.114 * b[i] as f64;
            features.push((y / 255.0).clamp(0.0, 1.0));
        }
    }
    let features = Array2::from_shape_vec((n, PLANE), features).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LabeledCloud::new(features, labels, 10, split, SampleShape::Image { channels: 1, height: 32, width: 32 })
}

fn load_files(dir: &Path, names: &[&str], split: Split) -> Result<LabeledCloud> {
    let mut bytes = Vec::new();
    for name in names {
        bytes.extend(fs::read(dir.join(name))?);
    }
    parse_cifar_records(&bytes, split)
}

/// Loads `data_batch_{1..5}.bin` and `test_batch.bin` from `dir`.
pub fn load_cifar10(dir: impl AsRef<Path>) -> Result<(LabeledCloud, LabeledCloud)> {
    let dir = dir.as_ref();
    Ok((load_files(dir, &TRAIN_BATCHES, Split::Train)?, load_files(dir, &[TEST_BATCH], Split::Test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, rgb: [u8; 3]) -> Vec<u8> {
        let mut rec = vec![label];
        for c in rgb {
            rec.extend(std::iter::repeat_n(c, PLANE));
        }
        rec
    }

    #[test]
    fn all_red_is_luma_weight() {
        let ds = parse_cifar_records(&record(3, [255, 0, 0]), Split::Test).unwrap();
        assert_eq!(ds.labels, vec![3]);
        assert!(ds.features.iter().all(|&v| (v - 0.299).abs() < 1e-12));
        let ds = parse_cifar_records(&record(0, [255, 255, 255]), Split::Test).unwrap();
        assert!(ds.features.iter().all(|&v| v <= 1.0 && (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn truncated_record() {
        let rec = record(1, [1, 2, 3]);
        assert!(matches!(parse_cifar_records(&rec[..RECORD_BYTES - 1], Split::Train), Err(Error::TruncatedFile(_))));
    }

    #[test]
    fn bad_label() {
        assert!(matches!(
            parse_cifar_records(&record(10, [0, 0, 0]), Split::Train),
            Err(Error::BadLabel { label: 10, .. })
        ));
    }

    #[test]
    fn loads_directory() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in TRAIN_BATCHES.iter().enumerate() {
            fs::write(dir.path().join(name), record(i as u8, [10, 20, 30])).unwrap();
        }
        fs::write(dir.path().join(TEST_BATCH), [record(9, [0, 0, 0]), record(8, [0, 0, 0])].concat()).unwrap();
        let (train, test) = load_cifar10(dir.path()).unwrap();
        assert_eq!(train.labels, vec![0, 1, 2, 3, 4]);
        assert_eq!(test.len(), 2);
    }
}
