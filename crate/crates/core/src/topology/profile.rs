//! End-to-end Betti measurement of a point cloud: landmarks, distances,
//! scale, filtration, reduction.

use serde::{Deserialize, Serialize};

use super::filtration::{build_vr_filtration_with_budget, DEFAULT_SIMPLEX_BUDGET};
use super::persistence::{betti_at_scale, betti_at_scale_robust, reduce_boundary_matrix, BettiVector, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::pointcloud::{maxmin_indices, DistanceMatrix, pairwise_distances, scale_select, PointCloud};

pub const DEFAULT_SUBSAMPLE: usize = 300;
pub const DEFAULT_QUANTILE: f64 = 0.15;
pub const DEFAULT_MAX_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BettiConfig {
    /// Landmark count; clouds with fewer points are used whole.
    pub subsample: usize,
    pub seed: u64,
    pub quantile: f64,
    /// Highest homology dimension reported.
    pub max_dim: usize,
    /// Robust mode: count only intervals with persistence >= `delta * eps`.
    pub robust_delta: Option<f64>,
    pub simplex_budget: usize,
}

impl Default for BettiConfig {
    fn default() -> Self {
        Self {
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
            quantile: DEFAULT_QUANTILE,
            max_dim: DEFAULT_MAX_DIM,
            robust_delta: None,
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

impl BettiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsample == 0 {
            return Err(Error::InvalidCount("subsample must be >= 1".into()));
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(Error::InvalidQuantile(self.quantile));
        }
        if self.max_dim + 1 > super::filtration::MAX_SIMPLEX_DIM {
            return Err(Error::InvalidArgument(format!("max_dim {} exceeds 2", self.max_dim)));
        }
        if let Some(d) = self.robust_delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("robust_delta {d} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiProfile {
    pub betti: BettiVector,
    /// Points actually used after landmarking.
    pub subsample: usize,
    pub simplices: usize,
    pub diagram: PersistenceDiagram,
}

impl BettiProfile {
    pub fn eps(&self) -> f64 {
        self.betti.scale()
    }
}

fn distinct(dm: &DistanceMatrix) -> DistanceMatrix {
    let keep: Vec<usize> = (0..dm.len()).filter(|&j| (0..j).all(|i| dm.get(i, j) > 0.0)).collect();
    if keep.len() == dm.len() {
        return dm.clone();
    }
    let entries = keep.iter().flat_map(|&i| keep.iter().map(move |&j| dm.get(i, j))).collect();
    DistanceMatrix::from_entries(keep.len(), entries).expect("sub-matrix of a valid matrix")
}

pub fn betti_profile(cloud: &PointCloud, cfg: &BettiConfig) -> Result<BettiProfile> {
    cfg.validate()?;
    let m = cfg.subsample.min(cloud.len());
    // Landmarks keep their input order; the Betti numbers do not depend on
    // vertex labels, and input order reduces faster than selection order.
    let mut idx = maxmin_indices(cloud, m, cfg.seed)?;
    idx.sort_unstable();
    let landmarks = cloud.select(&idx)?;
    let dm = pairwise_distances(&landmarks);
    let eps = if m < 2 { 0.0 } else { scale_select(&dm, cfg.quantile)? };
    // Coincident landmarks are dominated vertices: dropping them leaves the
    // complex's homotopy type unchanged at every scale while keeping
    // degenerate clouds (e.g. dead feature maps) from exploding.
    let dm = distinct(&dm);
    // Deaths up to eps * (1 + delta) decide whether an interval alive at eps
    // is long enough in robust mode.
    let eps_max = eps * (1.0 + cfg.robust_delta.unwrap_or(0.0));
    let filtration = build_vr_filtration_with_budget(&dm, eps_max, cfg.max_dim + 1, cfg.simplex_budget)?;
    let diagram = reduce_boundary_matrix(&filtration)?;
    let betti = match cfg.robust_delta {
        Some(delta) => betti_at_scale_robust(&diagram, eps, cfg.max_dim, delta * eps),
        None => betti_at_scale(&diagram, eps, cfg.max_dim),
    };
    Ok(BettiProfile { betti, subsample: m, simplices: filtration.len(), diagram })
}
