//! Point clouds, Euclidean distance matrices, landmark subsampling and
//! scale selection.

use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// `n` points in `d`-dimensional Euclidean space, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 {
            return Err(Error::InvalidCount("point cloud must contain at least one point".into()));
        }
        if d == 0 {
            return Err(Error::InvalidCount("point dimension must be at least 1".into()));
        }
        for ((i, j), v) in points.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput { point: i, axis: j });
            }
        }
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::ShapeMismatch(format!(
                "row {i} has {} coordinates, expected {d}",
                r.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.points
    }

    /// Sub-cloud made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidCount("selection is empty".into()));
        }
        Ok(Self { points: self.points.select(Axis(0), indices) })
    }

    /// Reads one point per line, comma-separated. A leading non-numeric
    /// line is treated as a header and skipped.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if lineno == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::from_rows(&rows)
    }

    /// Writes one point per line with no header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.points.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a row-major `n x n` matrix.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {v} is not a finite non-negative distance"
                    )));
                }
                if v != entries[j * n + i] {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Strictly-upper-triangular entries in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }
}

fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(cloud.point(i), cloud.point(j));
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// Greedy farthest-point landmark indices starting from `first`. Ties go to
/// the lowest index.
pub fn maxmin_indices_from(cloud: &PointCloud, m: usize, first: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if m == 0 || m > n {
        return Err(Error::InvalidCount(format!("subsample size {m} must be in 1..={n}")));
    }
    if first >= n {
        return Err(Error::InvalidArgument(format!("first landmark {first} out of range")));
    }
    let mut chosen = Vec::with_capacity(m);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut next = first;
    loop {
        chosen.push(next);
        taken[next] = true;
        if chosen.len() == m {
            break;
        }
        let p = cloud.point(next);
        let mut best = None;
        let mut best_d = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d = euclidean(p, cloud.point(i));
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if min_dist[i] > best_d {
                best_d = min_dist[i];
                best = Some(i);
            }
        }
        next = best.expect("m <= n leaves an untaken point");
    }
    Ok(chosen)
}

/// Landmark indices with the first point drawn uniformly from the
/// `"maxmin"` stream of `seed`.
pub fn maxmin_indices(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = cloud.len();
    if m == 0 || m > n {
        return Err(Error::InvalidCount(format!("subsample size {m} must be in 1..={n}")));
    }
    let first = rng::stream(seed, "maxmin").gen_range(0..n);
    maxmin_indices_from(cloud, m, first)
}

pub fn maxmin_subsample(cloud: &PointCloud, m: usize, seed: u64) -> Result<PointCloud> {
    let idx = maxmin_indices(cloud, m, seed)?;
    cloud.select(&idx)
}

/// Nearest-rank `q`-quantile of the pairwise distances (no interpolation).
pub fn scale_select(dm: &DistanceMatrix, quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::InvalidQuantile(quantile));
    }
    if dm.len() < 2 {
        return Err(Error::TooFewPoints(dm.len()));
    }
    nearest_rank(dm.upper_triangle(), quantile)
}

/// Nearest-rank quantile of an arbitrary multiset: the value at sorted
/// position `ceil(q * len)` (1-based).
pub fn nearest_rank(mut values: Vec<f64>, quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::InvalidQuantile(quantile));
    }
    if values.is_empty() {
        return Err(Error::InvalidCount("quantile of an empty set".into()));
    }
    values.sort_by(f64::total_cmp);
    let rank = ((quantile * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Ok(values[rank - 1])
}
