//! Vietoris–Rips filtrations.

use std::cmp::Ordering;
use std::collections::HashMap;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::pointcloud::DistanceMatrix;

pub const DEFAULT_SIMPLEX_BUDGET: usize = 5_000_000;
pub const MAX_SIMPLEX_DIM: usize = 3;

pub type Vertices = SmallVec<[u32; 4]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    /// Strictly increasing vertex ids.
    pub vertices: Vertices,
    pub value: f64,
}

impl Simplex {
    pub fn new(vertices: &[u32], value: f64) -> Self {
        Self { vertices: SmallVec::from_slice(vertices), value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Codimension-one faces, each missing one vertex.
    pub fn faces(&self) -> impl Iterator<Item = Vertices> + '_ {
        let k = self.vertices.len();
        (0..k).filter(move |_| k > 1).map(move |skip| {
            self.vertices
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect()
        })
    }
}

/// Total order used by every filtration: value, then dimension, then
/// lexicographic vertex tuple.
pub fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Packs up to four vertex ids into one hash key.
#[inline]
pub(crate) fn key(vertices: &[u32]) -> u128 {
    vertices
        .iter()
        .enumerate()
        .fold(0u128, |acc, (i, &v)| acc | ((v as u128 + 1) << (32 * i)))
}

#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
}

impl Filtration {
    /// Accepts an explicit simplex sequence. Faces are checked later, when
    /// the boundary matrix is reduced.
    pub fn from_simplices(simplices: Vec<Simplex>) -> Result<Self> {
        let mut max_dim = 0;
        for s in &simplices {
            if s.vertices.is_empty() || s.vertices.len() > MAX_SIMPLEX_DIM + 1 {
                return Err(Error::InvalidFiltration(format!(
                    "simplex {:?} has unsupported size",
                    s.vertices
                )));
            }
            if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidFiltration(format!(
                    "simplex {:?} vertices are not strictly increasing",
                    s.vertices
                )));
            }
            max_dim = max_dim.max(s.dim());
        }
        Ok(Self { simplices, max_dim })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Number of simplices per dimension `0..=max_dim`.
    pub fn counts_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }

    /// Simplex counts of the sub-complex with value <= `eps`.
    pub fn counts_at(&self, eps: f64) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in self.simplices.iter().filter(|s| s.value <= eps) {
            counts[s.dim()] += 1;
        }
        counts
    }

    pub(crate) fn index(&self) -> HashMap<u128, usize> {
        self.simplices.iter().enumerate().map(|(i, s)| (key(&s.vertices), i)).collect()
    }
}

/// Every simplex of dimension <= `max_dim` with diameter <= `eps_max`,
/// grown by incremental expansion of the `eps_max`-neighbourhood graph.
pub fn build_vr_filtration(dm: &DistanceMatrix, eps_max: f64, max_dim: usize) -> Result<Filtration> {
    build_vr_filtration_with_budget(dm, eps_max, max_dim, DEFAULT_SIMPLEX_BUDGET)
}

pub fn build_vr_filtration_with_budget(
    dm: &DistanceMatrix,
    eps_max: f64,
    max_dim: usize,
    budget: usize,
) -> Result<Filtration> {
    if !(eps_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps_max {eps_max} must be >= 0")));
    }
    if max_dim > MAX_SIMPLEX_DIM {
        return Err(Error::InvalidArgument(format!(
            "max_dim {max_dim} exceeds supported {MAX_SIMPLEX_DIM}"
        )));
    }
    let n = dm.len();
    if n > u32::MAX as usize - 1 {
        return Err(Error::InvalidCount(format!("{n} vertices exceed the vertex id range")));
    }
    let mut simplices = Vec::new();
    let check = |len: usize, dim: usize| {
        if len > budget {
            Err(Error::SimplexBudgetExceeded { budget, dim })
        } else {
            Ok(())
        }
    };
    for v in 0..n as u32 {
        simplices.push(Simplex::new(&[v], 0.0));
        check(simplices.len(), 0)?;
    }

    // Upper neighbours of each vertex, ascending.
    let upper: Vec<Vec<u32>> = (0..n)
        .map(|i| (i + 1..n).filter(|&j| dm.get(i, j) <= eps_max).map(|j| j as u32).collect())
        .collect();

    if max_dim >= 1 {
        let mut stack: Vec<(Vertices, f64, Vec<u32>)> = Vec::new();
        for u in 0..n as u32 {
            stack.push((SmallVec::from_slice(&[u]), 0.0, upper[u as usize].clone()));
            while let Some((verts, value, candidates)) = stack.pop() {
                for (ci, &w) in candidates.iter().enumerate() {
                    let mut vs = verts.clone();
                    let coface_value = verts
                        .iter()
                        .map(|&x| dm.get(x as usize, w as usize))
                        .fold(value, f64::max);
                    vs.push(w);
                    let dim = vs.len() - 1;
                    simplices.push(Simplex { vertices: vs.clone(), value: coface_value });
                    check(simplices.len(), dim)?;
                    if dim < max_dim {
                        let wn = &upper[w as usize];
                        let next: Vec<u32> =
                            candidates[ci + 1..].iter().copied().filter(|c| wn.binary_search(c).is_ok()).collect();
                        if !next.is_empty() {
                            stack.push((vs, coface_value, next));
                        }
                    }
                }
            }
        }
    }

    simplices.sort_by(filtration_order);
    Ok(Filtration { simplices, max_dim })
}
