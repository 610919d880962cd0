//! Nine-ring and nine-sphere datasets plus small manifold fixtures.
//!
//! Noise is Gaussian truncated at four standard deviations, so every point
//! lies within `4 * sigma` of its ideal manifold.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LabeledCloud, SampleShape, Split};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::rng;

pub const DEFAULT_TRAIN: usize = 16_000;
pub const DEFAULT_TEST: usize = 2_000;

/// Distance quantile for measuring a single class of either dataset. A
/// class spans nine components that share only about a ninth of all point
/// pairs, so the general default of 0.15 lands on gaps between components.
pub const CLASS_QUANTILE: f64 = 0.04;

/// Label of the green class; red is `1`.
pub const GREEN: usize = 0;
pub const RED: usize = 1;

const TRUNCATE: f64 = 4.0;

fn truncated_normal(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(r);
        if z.abs() <= TRUNCATE {
            return z;
        }
    }
}

/// Isotropic noise vector with norm at most `4 * sigma`.
fn ball_noise<const D: usize>(r: &mut ChaCha8Rng, sigma: f64) -> [f64; D] {
    loop {
        let v: [f64; D] = std::array::from_fn(|_| StandardNormal.sample(r));
        if v.iter().map(|x| x * x).sum::<f64>() <= TRUNCATE * TRUNCATE {
            return v.map(|x| x * sigma);
        }
    }
}

fn unit_sphere_point(r: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(r));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.map(|x| x / norm);
        }
    }
}

/// Geometry shared by both generators and recorded in dataset metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NineRingGeometry {
    pub radius: f64,
    pub grid_spacing: f64,
    pub noise_sigma: f64,
}

impl Default for NineRingGeometry {
    fn default() -> Self {
        Self { radius: 1.0, grid_spacing: 4.0, noise_sigma: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NineSphereGeometry {
    pub radii: [f64; 3],
    pub grid_spacing: f64,
    pub noise_sigma: f64,
}

impl Default for NineSphereGeometry {
    fn default() -> Self {
        Self { radii: [0.3, 0.6, 0.9], grid_spacing: 3.0, noise_sigma: 0.02 }
    }
}

pub fn cell_center(cell: usize, spacing: f64) -> [f64; 3] {
    [(cell % 3) as f64 * spacing, (cell / 3) as f64 * spacing, 0.0]
}

impl NineRingGeometry {
    /// Point on the ideal ring of `class` in `cell` at angle `theta`. The
    /// green ring lies in the xy-plane around the cell center; the red ring
    /// lies in the xz-plane, shifted by one radius along x, so each passes
    /// through the other's center.
    pub fn ring_point(&self, class: usize, cell: usize, theta: f64) -> [f64; 3] {
        let c = cell_center(cell, self.grid_spacing);
        let r = self.radius;
        if class == GREEN {
            [c[0] + r * theta.cos(), c[1] + r * theta.sin(), c[2]]
        } else {
            [c[0] + r + r * theta.cos(), c[1], c[2] + r * theta.sin()]
        }
    }

    /// Distance from `p` to the ideal ring of `class` in `cell`.
    pub fn distance_to_ring(&self, p: [f64; 3], class: usize, cell: usize) -> f64 {
        let c = cell_center(cell, self.grid_spacing);
        let r = self.radius;
        let (u, v, w) = if class == GREEN {
            (p[0] - c[0], p[1] - c[1], p[2] - c[2])
        } else {
            (p[0] - c[0] - r, p[2] - c[2], p[1] - c[1])
        };
        let planar = (u * u + v * v).sqrt();
        ((planar - r).powi(2) + w * w).sqrt()
    }
}

fn check_count(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidCount(format!("{name} = {n}, need at least {min}")));
    }
    Ok(())
}

fn build(points: Vec<[f64; 3]>, labels: Vec<usize>, split: Split) -> Result<LabeledCloud> {
    let n = points.len();
    let flat: Vec<f64> = points.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((n, 3), flat).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LabeledCloud::new(features, labels, 2, split, SampleShape::Flat(3))
}

fn nine_rings_split(n: usize, seed: u64, split: Split, geo: &NineRingGeometry) -> Result<LabeledCloud> {
    let mut r = rng::stream(seed, &format!("nine-rings/{}", split.name()));
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let cell = (i / 2) % 9;
        let theta = r.gen_range(0.0..2.0 * PI);
        let p = geo.ring_point(class, cell, theta);
        let e = ball_noise::<3>(&mut r, geo.noise_sigma);
        points.push([p[0] + e[0], p[1] + e[1], p[2] + e[2]]);
        labels.push(class);
    }
    build(points, labels, split)
}

/// 3x3 grid of cells, each holding a green and a red ring linked through
/// each other. Classes alternate sample by sample, rings cycle through the
/// cells, so classes and rings are balanced.
pub fn gen_nine_rings(n_train: usize, n_test: usize, seed: u64) -> Result<(LabeledCloud, LabeledCloud)> {
    gen_nine_rings_with(n_train, n_test, seed, &NineRingGeometry::default())
}

pub fn gen_nine_rings_with(
    n_train: usize,
    n_test: usize,
    seed: u64,
    geo: &NineRingGeometry,
) -> Result<(LabeledCloud, LabeledCloud)> {
    check_count("n_train", n_train, 18)?;
    check_count("n_test", n_test, 18)?;
    Ok((
        nine_rings_split(n_train, seed, Split::Train, geo)?,
        nine_rings_split(n_test, seed, Split::Test, geo)?,
    ))
}

fn nine_spheres_split(n: usize, seed: u64, split: Split, geo: &NineSphereGeometry) -> Result<LabeledCloud> {
    let mut r = rng::stream(seed, &format!("nine-spheres/{}", split.name()));
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut red_seen = 0usize;
    for i in 0..n {
        let class = i % 2;
        let (unit, shell) = if class == GREEN {
            ((i / 2) % 9, 1)
        } else {
            // Red samples cycle over the 18 shells: inner and outer of each unit.
            let k = red_seen % 18;
            red_seen += 1;
            (k % 9, if k < 9 { 0 } else { 2 })
        };
        let c = cell_center(unit, geo.grid_spacing);
        let dir = unit_sphere_point(&mut r);
        let radius = geo.radii[shell] + geo.noise_sigma * truncated_normal(&mut r);
        points.push([c[0] + radius * dir[0], c[1] + radius * dir[1], c[2] + radius * dir[2]]);
        labels.push(class);
    }
    build(points, labels, split)
}

/// 3x3 grid of units, each three concentric shells: red, green, red from
/// the inside out. Nine green shells against eighteen red ones, with
/// balanced sample counts per class.
pub fn gen_nine_spheres(n_train: usize, n_test: usize, seed: u64) -> Result<(LabeledCloud, LabeledCloud)> {
    gen_nine_spheres_with(n_train, n_test, seed, &NineSphereGeometry::default())
}

pub fn gen_nine_spheres_with(
    n_train: usize,
    n_test: usize,
    seed: u64,
    geo: &NineSphereGeometry,
) -> Result<(LabeledCloud, LabeledCloud)> {
    check_count("n_train", n_train, 27)?;
    check_count("n_test", n_test, 27)?;
    Ok((
        nine_spheres_split(n_train, seed, Split::Train, geo)?,
        nine_spheres_split(n_test, seed, Split::Test, geo)?,
    ))
}

/// `n` points on a circle of `radius` in the xy-plane with per-coordinate
/// truncated Gaussian noise.
pub fn sample_circle(n: usize, radius: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    let mut r = rng::stream(seed, "circle");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let t = r.gen_range(0.0..2.0 * PI);
            let e = ball_noise::<2>(&mut r, sigma);
            vec![radius * t.cos() + e[0], radius * t.sin() + e[1]]
        })
        .collect();
    PointCloud::from_rows(&rows)
}

/// `n` points on a 2-sphere of `radius` with radial truncated noise.
pub fn sample_sphere(n: usize, radius: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    let mut r = rng::stream(seed, "sphere");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let d = unit_sphere_point(&mut r);
            let rad = radius + sigma * truncated_normal(&mut r);
            d.iter().map(|x| x * rad).collect()
        })
        .collect();
    PointCloud::from_rows(&rows)
}

/// Isotropic Gaussian blobs with unit standard deviation, one per center.
pub fn gaussian_blobs(per_blob: usize, centers: &[Vec<f64>], seed: u64) -> Result<PointCloud> {
    let mut r = rng::stream(seed, "blobs");
    let mut rows = Vec::with_capacity(per_blob * centers.len());
    for c in centers {
        for _ in 0..per_blob {
            rows.push(c.iter().map(|&x| x + truncated_normal(&mut r)).collect());
        }
    }
    PointCloud::from_rows(&rows)
}
