use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeSet, Point};

/// Parameters of the Cantor product `A_K` in `{1..2^K}^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    #[serde(rename = "K")]
    pub big_k: u32,
    pub delta: f64,
    /// number of deletion rounds, `k < K`
    pub k: u32,
    pub d: usize,
}

impl CantorSpec {
    pub fn new(big_k: u32, delta: f64, k: u32, d: usize) -> Result<Self> {
        if !(1..=30).contains(&big_k) {
            return Err(invalid("K", "must lie in 1..=30"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if k >= big_k {
            return Err(invalid("k", format!("deletion rounds {k} must be below K = {big_k}")));
        }
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(CantorSpec { big_k, delta, k, d })
    }

    pub fn n(&self) -> i64 {
        1i64 << self.big_k
    }
}

/// A deleted run `lo..=hi` of the 1-D construction, removed in round `depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub depth: u32,
    pub lo: i64,
    pub hi: i64,
}

impl Gap {
    pub fn width(&self) -> i64 {
        self.hi - self.lo + 1
    }

    /// Centre of the gap; the lower of the two middles for even widths.
    pub fn middle(&self) -> i64 {
        self.lo + (self.width() - 1) / 2
    }

    pub fn contains(&self, t: i64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Clone, Debug)]
pub struct CantorSet {
    pub spec: CantorSpec,
    pub set: LatticeSet,
    /// surviving 1-D coordinates
    pub line: Vec<i64>,
    pub gaps: Vec<Gap>,
    pub size: usize,
    pub boundary_size: usize,
    /// `2^{kd} 2d [(1-delta)^k 2^{K-k}]^{d-1}`, which ignores rounding and corners
    pub boundary_formula: f64,
}

impl CantorSet {
    /// Deepest gap containing 1-D coordinate `t`, if any.
    pub fn gap_at(&self, t: i64) -> Option<&Gap> {
        self.gaps.iter().find(|g| g.contains(t))
    }

    /// Centre of the cube `{1..2^K}^d`, `(2^{K-1}, ..., 2^{K-1})`.
    pub fn centre(&self) -> Point {
        Point::splat(self.spec.d, self.spec.n() / 2)
    }
}

/// Builds `A_K`: starting from `{1..2^K}`, each of `k` rounds deletes
/// `round(delta L)` central points from every interval of length `L`; when the
/// two survivors differ in length the left one is longer. The set is the
/// `d`-fold product of the survivors.
pub fn cantor_set(spec: &CantorSpec) -> Result<CantorSet> {
    let mut intervals = vec![(1i64, spec.n())];
    let mut gaps = Vec::new();
    for depth in 1..=spec.k {
        let mut next = Vec::with_capacity(2 * intervals.len());
        for &(lo, hi) in &intervals {
            let len = hi - lo + 1;
            let del = (spec.delta * len as f64).round() as i64;
            let rest = len - del;
            let left = (rest + 1) / 2;
            let right = rest / 2;
            if left < 1 || right < 1 {
                return Err(Error::CantorEmpty { depth: depth as usize });
            }
            next.push((lo, lo + left - 1));
            if del > 0 {
                gaps.push(Gap { depth, lo: lo + left, hi: lo + left + del - 1 });
            }
            next.push((hi - right + 1, hi));
        }
        intervals = next;
    }
    let line: Vec<i64> = intervals.iter().flat_map(|&(lo, hi)| lo..=hi).collect();
    let d = spec.d;
    let mut pts = Vec::with_capacity(line.len().pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        pts.push(Point::from(idx.iter().map(|&i| line[i]).collect::<Vec<_>>()));
        let mut a = d;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < line.len() {
                break;
            }
            idx[a] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    let set = LatticeSet::from_points(d, pts)?;
    let boundary_size = set.boundary()?.len();
    let side = (1.0 - spec.delta).powi(spec.k as i32) * 2f64.powi((spec.big_k - spec.k) as i32);
    let boundary_formula = 2f64.powi((spec.k as usize * d) as i32) * 2.0 * d as f64 * side.powi(d as i32 - 1);
    Ok(CantorSet { spec: spec.clone(), size: set.len(), set, line, gaps, boundary_size, boundary_formula })
}
