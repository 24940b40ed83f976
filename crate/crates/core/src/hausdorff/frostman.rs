use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_count, LadicCube, LatticeBall, LatticeSet};

use super::content::{check_l, check_rho};
use super::{DiscreteMeasure, SATURATION_SLACK};

/// Frostman measure with the saturation record of its construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frostman {
    pub measure: DiscreteMeasure,
    pub l: u64,
    pub rho: f64,
    /// last level processed: the first `K` with `|A| < l^{K rho}`
    pub levels: u32,
    /// cubes whose mass equalled `|C|^{rho/d}` when their level was processed
    pub saturated: BTreeSet<LadicCube>,
    /// number of cubes whose density was scaled down
    pub reductions: usize,
}

/// Builds the measure level by level: start from unit mass on every point and,
/// for `j = 1, 2, ...`, scale down uniformly inside every level-`j` cube whose
/// mass exceeds `|C|^{rho/d} = l^{j rho}`. Stops after the first level `K` with
/// `|A| < l^{K rho}`, past which no cube can exceed its bound.
pub fn frostman_measure(a: &LatticeSet, l: u64, rho: f64) -> Result<Frostman> {
    check_l(l)?;
    check_rho(rho, a.dim())?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let pts = a.points();
    let mut mass = vec![1.0f64; pts.len()];
    let mut saturated = BTreeSet::new();
    let mut reductions = 0;
    let n = pts.len() as f64;
    let mut j = 0u32;
    loop {
        j += 1;
        let w = (l as f64).powf(j as f64 * rho);
        let mut groups: BTreeMap<LadicCube, Vec<usize>> = BTreeMap::new();
        for (i, p) in pts.iter().enumerate() {
            groups.entry(LadicCube::ancestor(p, j, l)).or_default().push(i);
        }
        for (cube, idx) in groups {
            let m: f64 = idx.iter().map(|&i| mass[i]).sum();
            if m > w * (1.0 + SATURATION_SLACK) {
                let f = w / m;
                for &i in &idx {
                    mass[i] *= f;
                }
                reductions += 1;
                saturated.insert(cube);
            } else if m * (1.0 + SATURATION_SLACK) >= w {
                saturated.insert(cube);
            }
        }
        if n < w {
            break;
        }
    }
    let measure = DiscreteMeasure { mass: pts.iter().cloned().zip(mass).collect() };
    Ok(Frostman { measure, l, rho, levels: j, saturated, reductions })
}

/// Disjoint saturated cubes covering the support: for each point the largest
/// saturated cube containing it, or its singleton, which the initial unit mass
/// saturates when no reduction reached the point.
pub fn extract_saturated_cover(f: &Frostman) -> Vec<LadicCube> {
    let mut out = BTreeSet::new();
    for p in f.measure.mass.keys() {
        let cube = (1..=f.levels)
            .rev()
            .map(|j| LadicCube::ancestor(p, j, f.l))
            .find(|c| f.saturated.contains(c))
            .unwrap_or_else(|| LadicCube::ancestor(p, 0, f.l));
        out.insert(cube);
    }
    out.into_iter().collect()
}

/// Largest `mu(C) / |C|^{rho/d}` over every l-adic cube meeting the support.
pub fn max_cube_ratio(mu: &DiscreteMeasure, l: u64, rho: f64) -> f64 {
    let total = mu.total();
    let mut worst = 0.0f64;
    let mut j = 0u32;
    loop {
        let w = (l as f64).powf(j as f64 * rho);
        let mut groups: BTreeMap<LadicCube, f64> = BTreeMap::new();
        for (p, m) in &mu.mass {
            *groups.entry(LadicCube::ancestor(p, j, l)).or_default() += m;
        }
        worst = groups.values().fold(worst, |acc, m| acc.max(m / w));
        if w > total || (l as i64).checked_pow(j + 2).is_none() {
            return worst;
        }
        j += 1;
    }
}

/// Largest `mu(B) / |B|^{rho/d}` over lattice balls centred in the bounding
/// box of the support. For a fixed centre only radii equal to distances to
/// support points matter.
pub fn max_ball_ratio(mu: &DiscreteMeasure, rho: f64) -> Result<(f64, LatticeBall)> {
    let support = LatticeSet::from_points(
        mu.mass.keys().next().map(|p| p.dim()).ok_or(Error::EmptySet)?,
        mu.mass.keys().cloned(),
    )?;
    let d = support.dim();
    let mut best = (0.0, LatticeBall { center: support.points()[0].clone(), radius: 0.0 });
    let mut sizes: BTreeMap<i64, f64> = BTreeMap::new();
    for c in support.bbox().expect("nonempty").points() {
        let mut by_dist: Vec<(i64, f64)> = mu.mass.iter().map(|(p, &m)| (p.sub(&c).norm_sq(), m)).collect();
        by_dist.sort_by_key(|e| e.0);
        let mut acc = 0.0;
        for (k, &(r2, m)) in by_dist.iter().enumerate() {
            acc += m;
            if k + 1 < by_dist.len() && by_dist[k + 1].0 == r2 {
                continue;
            }
            let size = *sizes.entry(r2).or_insert_with(|| (ball_count(d, (r2 as f64).sqrt()) as f64).powf(rho / d as f64));
            if acc / size > best.0 {
                best = (acc / size, LatticeBall { center: c.clone(), radius: (r2 as f64).sqrt() });
            }
        }
    }
    Ok(best)
}
