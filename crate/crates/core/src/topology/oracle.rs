//! Brute-force homology of a single Vietoris–Rips complex.
//!
//! Independent of the persistence pipeline: simplices come from subset
//! enumeration and Betti numbers from boundary ranks,
//! `b_k = n_k - rank d_k - rank d_{k+1}`, computed by XOR-basis elimination
//! over Z/2.

use std::collections::HashMap;

use super::persistence::BettiVector;
use crate::error::{Error, Result};
use crate::pointcloud::DistanceMatrix;

pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Dense Z/2 vector as 64-bit words.
#[derive(Clone)]
struct BitVec(Vec<u64>);

impl BitVec {
    fn zeros(len: usize) -> Self {
        Self(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }

    fn highest(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn xor(&mut self, other: &BitVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
}

/// Rank over Z/2 of a set of column vectors.
fn rank(columns: Vec<BitVec>, rows: usize) -> usize {
    let mut basis: Vec<Option<BitVec>> = vec![None; rows];
    let mut rank = 0;
    for mut col in columns {
        while let Some(h) = col.highest() {
            match &basis[h] {
                Some(b) => col.xor(b),
                None => {
                    basis[h] = Some(col);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// All vertex subsets of size `k + 1` with diameter <= `eps`.
fn simplices_of_dim(dm: &DistanceMatrix, eps: f64, k: usize) -> Vec<Vec<usize>> {
    fn extend(dm: &DistanceMatrix, eps: f64, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        let start = current.last().map_or(0, |&v| v + 1);
        for v in start..dm.len() {
            if current.iter().all(|&u| dm.get(u, v) <= eps) {
                current.push(v);
                extend(dm, eps, size, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(dm, eps, k + 1, &mut Vec::new(), &mut out);
    out
}

fn boundary_rank(faces: &[Vec<usize>], cofaces: &[Vec<usize>]) -> usize {
    if faces.is_empty() || cofaces.is_empty() {
        return 0;
    }
    let index: HashMap<&[usize], usize> = faces.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
    let columns = cofaces
        .iter()
        .map(|s| {
            let mut col = BitVec::zeros(faces.len());
            for skip in 0..s.len() {
                let face: Vec<usize> =
                    s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                col.set(index[face.as_slice()]);
            }
            col
        })
        .collect();
    rank(columns, faces.len())
}

/// Betti numbers `b_0..=b_max_dim` of the VR complex at `eps`.
pub fn brute_force_betti(dm: &DistanceMatrix, eps: f64, max_dim: usize) -> Result<BettiVector> {
    if dm.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n: dm.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let by_dim: Vec<Vec<Vec<usize>>> = (0..=max_dim + 1).map(|k| simplices_of_dim(dm, eps, k)).collect();
    let ranks: Vec<usize> =
        (0..=max_dim + 1).map(|k| if k == 0 { 0 } else { boundary_rank(&by_dim[k - 1], &by_dim[k]) }).collect();
    let betti = (0..=max_dim)
        .map(|k| by_dim[k].len() - ranks[k] - ranks.get(k + 1).copied().unwrap_or(0))
        .collect();
    Ok(BettiVector::new(betti, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{pairwise_distances, PointCloud};
    use ndarray::array;

    #[test]
    fn filled_triangle_is_contractible() {
        let dm = DistanceMatrix::from_entries(3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(brute_force_betti(&dm, 1.0, 2).unwrap().betti, vec![1, 0, 0]);
    }

    #[test]
    fn square_cycle() {
        let cloud = PointCloud::new(array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let dm = pairwise_distances(&cloud);
        assert_eq!(brute_force_betti(&dm, 1.0, 2).unwrap().betti, vec![1, 1, 0]);
    }

    #[test]
    fn two_disjoint_filled_triangles() {
        let cloud = PointCloud::new(array![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.5, 0.8],
            [10.0, 0.0],
            [11.0, 0.0],
            [10.5, 0.8]
        ])
        .unwrap();
        let dm = pairwise_distances(&cloud);
        assert_eq!(brute_force_betti(&dm, 1.0, 2).unwrap().betti, vec![2, 0, 0]);
    }

    #[test]
    fn hollow_octahedron_has_a_void() {
        let cloud = PointCloud::new(array![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0]
        ])
        .unwrap();
        let dm = pairwise_distances(&cloud);
        // Opposite vertices are at distance 2, neighbours at sqrt(2).
        assert_eq!(brute_force_betti(&dm, 1.5, 2).unwrap().betti, vec![1, 0, 1]);
    }

    #[test]
    fn refuses_large_inputs() {
        let cloud = PointCloud::new(ndarray::Array2::zeros((26, 1))).unwrap();
        assert!(matches!(
            brute_force_betti(&pairwise_distances(&cloud), 1.0, 1),
            Err(Error::TooLarge { n: 26, .. })
        ));
    }
}
