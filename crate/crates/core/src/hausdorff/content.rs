use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{ball_count, pow, LadicCube, LatticeBall, LatticeSet, Point};

use super::{t1, t2, ContentResult, Covering};

pub(crate) fn check_rho(rho: f64, d: usize) -> Result<()> {
    if !(rho > 0.0 && rho <= d as f64) {
        return Err(invalid("rho", format!("{rho} not in (0, {d}]")));
    }
    Ok(())
}

pub(crate) fn check_l(l: u64) -> Result<()> {
    if l < 2 {
        return Err(invalid("l", format!("branching {l} < 2")));
    }
    Ok(())
}

/// Highest level whose cubes can appear in an optimal cover: a cube costing
/// at least `|A|` never beats covering by singletons.
pub(crate) fn top_level(n: usize, l: u64, rho: f64) -> u32 {
    let mut j = 0u32;
    loop {
        let next = j + 1;
        let fits = (l as i64).checked_pow(next).and_then(|s| s.checked_mul(l as i64)).is_some();
        if !fits || (l as f64).powf(next as f64 * rho) >= n as f64 {
            return j;
        }
        j = next;
    }
}

struct Node {
    cost: f64,
    take: bool,
    children: Vec<Point>,
}

/// Exact l-adic content `m_rho(A)` with an optimal cover.
///
/// Dynamic programming over the cubes meeting `A`, bottom-up from the
/// singletons: `cost(C) = min(|C|^{rho/d}, sum of children costs)`. The root
/// is the family of top-level cubes meeting `A`.
pub fn m_rho(a: &LatticeSet, l: u64, rho: f64) -> Result<ContentResult> {
    check_l(l)?;
    check_rho(rho, a.dim())?;
    if a.is_empty() {
        return Ok(ContentResult { value: 0.0, rho, l: Some(l), covering: Covering::Cubes(Vec::new()), exact: true });
    }
    let top = top_level(a.len(), l, rho);
    let mut levels: Vec<BTreeMap<Point, Node>> = Vec::with_capacity(top as usize + 1);
    levels.push(a.iter().map(|p| (p.clone(), Node { cost: 1.0, take: true, children: Vec::new() })).collect());
    for j in 1..=top {
        let side = pow(l, j);
        let w = (l as f64).powf(j as f64 * rho);
        let mut next: BTreeMap<Point, Node> = BTreeMap::new();
        for (corner, node) in &levels[j as usize - 1] {
            let parent: Point = corner.coords().iter().map(|c| c.div_euclid(side) * side).collect::<Vec<_>>().into();
            let e = next.entry(parent).or_insert(Node { cost: 0.0, take: false, children: Vec::new() });
            e.cost += node.cost;
            e.children.push(corner.clone());
        }
        for node in next.values_mut() {
            if w <= node.cost {
                node.cost = w;
                node.take = true;
            }
        }
        levels.push(next);
    }
    let value = levels[top as usize].values().map(|n| n.cost).sum();
    let mut cover = Vec::new();
    let mut stack: Vec<(u32, Point)> = levels[top as usize].keys().rev().map(|c| (top, c.clone())).collect();
    while let Some((j, corner)) = stack.pop() {
        let node = &levels[j as usize][&corner];
        if node.take {
            cover.push(LadicCube { level: j, corner, branching: l });
        } else {
            stack.extend(node.children.iter().rev().map(|c| (j - 1, c.clone())));
        }
    }
    Ok(ContentResult { value, rho, l: Some(l), covering: Covering::Cubes(cover), exact: true })
}

/// Two-sided bracket on `h_rho(A)` from `m_rho(A)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HBounds {
    pub lower: f64,
    pub upper: f64,
    pub m: ContentResult,
    pub t1: f64,
    pub t2: f64,
}

/// `(m_rho / t2, t1 m_rho)`, which brackets `h_rho(A)`.
pub fn h_rho_bounds(a: &LatticeSet, l: u64, rho: f64) -> Result<HBounds> {
    let m = m_rho(a, l, rho)?;
    let (c1, c2) = (t1(a.dim()), t2(a.dim(), l, rho));
    Ok(HBounds { lower: m.value / c2, upper: c1 * m.value, m, t1: c1, t2: c2 })
}

/// Largest set accepted by [`h_rho_brute_force`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 16;

/// Exact ball content over balls centred at lattice points of the bounding
/// box, by set-cover dynamic programming over subsets of `A`.
///
/// For a fixed centre only radii equal to distances to points of `A` matter,
/// so the candidate family is finite.
pub fn h_rho_brute_force(a: &LatticeSet, rho: f64) -> Result<ContentResult> {
    check_rho(rho, a.dim())?;
    let n = a.len();
    if n == 0 {
        return Ok(ContentResult { value: 0.0, rho, l: None, covering: Covering::Balls(Vec::new()), exact: true });
    }
    if n > BRUTE_FORCE_MAX_POINTS {
        return Err(invalid("set", format!("{n} points exceed the brute-force limit {BRUTE_FORCE_MAX_POINTS}")));
    }
    let d = a.dim();
    let pts = a.points();
    let mut best: BTreeMap<u32, (f64, LatticeBall)> = BTreeMap::new();
    let mut size_cache: BTreeMap<i64, f64> = BTreeMap::new();
    for c in a.bbox().expect("nonempty").points() {
        let mut by_dist: Vec<(i64, usize)> = pts.iter().enumerate().map(|(i, p)| (p.sub(&c).norm_sq(), i)).collect();
        by_dist.sort_unstable();
        let mut mask = 0u32;
        for (k, &(r2, i)) in by_dist.iter().enumerate() {
            mask |= 1 << i;
            if k + 1 < n && by_dist[k + 1].0 == r2 {
                continue;
            }
            let cost = *size_cache
                .entry(r2)
                .or_insert_with(|| (ball_count(d, (r2 as f64).sqrt()) as f64).powf(rho / d as f64));
            let e = best.entry(mask).or_insert((f64::INFINITY, LatticeBall { center: c.clone(), radius: 0.0 }));
            if cost < e.0 {
                *e = (cost, LatticeBall { center: c.clone(), radius: (r2 as f64).sqrt() });
            }
        }
    }
    let full = (1u32 << n) - 1;
    let balls: Vec<(u32, f64)> = best.iter().map(|(&m, &(c, _))| (m, c)).collect();
    let mut dp = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    dp[full as usize] = 0.0;
    for mask in (0..full).rev() {
        let low = (!mask).trailing_zeros();
        for (k, &(bm, cost)) in balls.iter().enumerate() {
            if bm & (1 << low) != 0 {
                let v = cost + dp[(mask | bm) as usize];
                if v < dp[mask as usize] {
                    dp[mask as usize] = v;
                    choice[mask as usize] = k;
                }
            }
        }
    }
    let mut cover = Vec::new();
    let mut mask = 0u32;
    while mask != full {
        let k = choice[mask as usize];
        let bm = balls[k].0;
        cover.push(best[&bm].1.clone());
        mask |= bm;
    }
    Ok(ContentResult { value: dp[0], rho, l: None, covering: Covering::Balls(cover), exact: true })
}
