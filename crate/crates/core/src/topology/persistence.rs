//! Boundary-matrix reduction over Z/2 and Betti numbers read off the
//! resulting persistence diagram.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::filtration::{key, Filtration};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
}

impl Interval {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    /// Alive at `eps`: `birth <= eps < death`.
    pub fn alive_at(&self, eps: f64) -> bool {
        self.birth <= eps && eps < self.death
    }
}

/// Intervals per homology dimension, `intervals[k]` for `H_k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub intervals: Vec<Vec<Interval>>,
}

impl PersistenceDiagram {
    pub fn dim(&self, k: usize) -> &[Interval] {
        self.intervals.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.intervals.len().checked_sub(1)
    }

    /// CSV with header `dim,birth,death`; infinite deaths are written `inf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dim,birth,death")?;
        for (k, ivs) in self.intervals.iter().enumerate() {
            for iv in ivs {
                if iv.is_essential() {
                    writeln!(w, "{k},{},inf", iv.birth)?;
                } else {
                    writeln!(w, "{k},{},{}", iv.birth, iv.death)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut pd = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", i + 1)));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("line {}: {e}", i + 1));
            let k: usize = fields[0].parse().map_err(|e| bad(&e))?;
            let birth: f64 = fields[1].parse().map_err(|e| bad(&e))?;
            let death = match fields[2] {
                "inf" => f64::INFINITY,
                s => s.parse().map_err(|e| bad(&e))?,
            };
            if pd.intervals.len() <= k {
                pd.intervals.resize(k + 1, Vec::new());
            }
            pd.intervals[k].push(Interval { birth, death });
        }
        Ok(pd)
    }
}

/// Betti numbers `(b_0, ..., b_K)` read at `scale`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub betti: Vec<usize>,
    #[serde(with = "ordered")]
    pub scale: OrderedScale,
}

/// Scale wrapper so `BettiVector` can derive `Eq`; never NaN by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedScale(pub f64);

impl Eq for OrderedScale {}

mod ordered {
    use super::OrderedScale;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &OrderedScale, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<OrderedScale, D::Error> {
        f64::deserialize(d).map(OrderedScale)
    }
}

impl BettiVector {
    pub fn new(betti: Vec<usize>, scale: f64) -> Self {
        Self { betti, scale: OrderedScale(scale) }
    }

    pub fn scale(&self) -> f64 {
        self.scale.0
    }

    pub fn get(&self, k: usize) -> usize {
        self.betti.get(k).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.betti.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.betti
            .iter()
            .enumerate()
            .map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }
}

fn add_column(target: &mut Vec<usize>, other: &[usize], scratch: &mut Vec<usize>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(target, scratch);
}

const NONE: usize = usize::MAX;

/// Standard column reduction over Z/2 with clearing. Dimensions are
/// reduced from the top down; a simplex that is the pivot of a reduced
/// higher-dimensional column is a known birth and its own column is
/// skipped.
pub fn reduce_boundary_matrix(f: &Filtration) -> Result<PersistenceDiagram> {
    let simplices = f.simplices();
    let n = simplices.len();
    let index = f.index();
    if index.len() != n {
        return Err(Error::InvalidFiltration("duplicate simplices".into()));
    }

    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); f.max_dim() + 1];
    for (i, s) in simplices.iter().enumerate() {
        by_dim[s.dim()].push(i);
    }

    // Boundaries as ascending row indices; the pivot is the last entry.
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in simplices.iter().enumerate() {
        if s.dim() == 0 {
            continue;
        }
        let mut col = Vec::with_capacity(s.vertices.len());
        for face in s.faces() {
            match index.get(&key(&face)) {
                Some(&j) if j < i && simplices[j].value <= s.value => col.push(j),
                _ => {
                    return Err(Error::InvalidFiltration(format!(
                        "face {:?} of {:?} does not precede it",
                        face.as_slice(),
                        s.vertices.as_slice()
                    )))
                }
            }
        }
        col.sort_unstable();
        columns[i] = col;
    }

    let mut pivot_owner = vec![NONE; n];
    let mut cleared = vec![false; n];
    let mut scratch = Vec::new();
    for dim in (1..=f.max_dim()).rev() {
        for &j in &by_dim[dim] {
            if cleared[j] {
                columns[j].clear();
                continue;
            }
            let mut col = std::mem::take(&mut columns[j]);
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low];
                if owner == NONE {
                    break;
                }
                add_column(&mut col, &columns[owner], &mut scratch);
            }
            if let Some(&low) = col.last() {
                pivot_owner[low] = j;
                cleared[low] = true;
            }
            columns[j] = col;
        }
    }

    let mut intervals = vec![Vec::new(); f.max_dim() + 1];
    for (j, col) in columns.iter().enumerate() {
        if let Some(&low) = col.last() {
            let birth = &simplices[low];
            intervals[birth.dim()].push(Interval { birth: birth.value, death: simplices[j].value });
        }
    }
    for (i, s) in simplices.iter().enumerate() {
        let is_death = !columns[i].is_empty();
        let is_birth = pivot_owner[i] != NONE;
        if !is_death && !is_birth {
            intervals[s.dim()].push(Interval { birth: s.value, death: f64::INFINITY });
        }
    }
    for ivs in &mut intervals {
        ivs.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
    }
    Ok(PersistenceDiagram { intervals })
}

/// `b_k = #{(b, d) in dim k : b <= eps < d}` for `k = 0..=max_dim`.
pub fn betti_at_scale(pd: &PersistenceDiagram, eps: f64, max_dim: usize) -> BettiVector {
    let betti = (0..=max_dim).map(|k| pd.dim(k).iter().filter(|iv| iv.alive_at(eps)).count()).collect();
    BettiVector::new(betti, eps)
}

/// As [`betti_at_scale`], counting only intervals whose persistence is at
/// least `min_persistence`.
pub fn betti_at_scale_robust(
    pd: &PersistenceDiagram,
    eps: f64,
    max_dim: usize,
    min_persistence: f64,
) -> BettiVector {
    let betti = (0..=max_dim)
        .map(|k| {
            pd.dim(k)
                .iter()
                .filter(|iv| iv.alive_at(eps) && iv.persistence() >= min_persistence)
                .count()
        })
        .collect();
    BettiVector::new(betti, eps)
}
