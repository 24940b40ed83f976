#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use harmlab::hausdorff::DiscreteMeasure;
use harmlab::{LadicCube, LatticeSet, Point};
use rand::Rng;

/// Expected number of visits to the origin of the walk on Z^3 (Watson's integral).
pub const WATSON_G0: f64 = 1.516_386_059_151_978;

/// Additive constant of the planar potential kernel, `(2 gamma + ln 8) / pi`.
pub fn kernel_constant_oracle() -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    (2.0 * EULER_GAMMA + 8f64.ln()) / std::f64::consts::PI
}

pub fn random_set<R: Rng>(rng: &mut R, d: usize, lo: i64, hi: i64, count: usize) -> LatticeSet {
    let pts = (0..count).map(|_| Point::new(&(0..d).map(|_| rng.gen_range(lo..=hi)).collect::<Vec<_>>()));
    LatticeSet::from_points(d, pts).unwrap()
}

fn cube_cost(level: u32, l: u64, rho: f64) -> f64 {
    (l as f64).powf(level as f64 * rho)
}

/// Exhaustive search over covers by l-adic cubes.
///
/// The first uncovered point (in sorted order) must lie in some cube of the
/// cover; branch on which of its ancestors that is. Cubes costing at least
/// `|A|` are skipped since singletons already achieve `|A|`.
pub fn brute_force_m_rho(a: &LatticeSet, l: u64, rho: f64) -> f64 {
    let pts: Vec<Point> = a.iter().cloned().collect();
    let n = pts.len() as f64;
    let mut top = 0;
    while cube_cost(top + 1, l, rho) < n {
        top += 1;
    }
    fn go(pts: &[Point], covered: &mut Vec<bool>, l: u64, rho: f64, top: u32, cost: f64, best: &mut f64) {
        if cost >= *best {
            return;
        }
        let Some(i) = covered.iter().position(|c| !c) else {
            *best = cost;
            return;
        };
        for j in 0..=top {
            let c = LadicCube::ancestor(&pts[i], j, l);
            let newly: Vec<usize> = (0..pts.len()).filter(|&k| !covered[k] && c.contains(&pts[k])).collect();
            for &k in &newly {
                covered[k] = true;
            }
            go(pts, covered, l, rho, top, cost + cube_cost(j, l, rho), best);
            for &k in &newly {
                covered[k] = false;
            }
        }
    }
    let mut best = n + 1.0;
    go(&pts, &mut vec![false; pts.len()], l, rho, top, 0.0, &mut best);
    best.min(n)
}

/// Largest `mu(C) / |C|^{rho/d}` over every l-adic cube meeting the support.
pub fn max_cube_ratio_oracle(mu: &DiscreteMeasure, l: u64, rho: f64) -> (f64, Option<LadicCube>) {
    let total = mu.total();
    let mut worst = (0.0, None);
    let mut j = 0;
    loop {
        let bound = cube_cost(j, l, rho);
        let mut sums: BTreeMap<LadicCube, f64> = BTreeMap::new();
        for (p, &m) in &mu.mass {
            *sums.entry(LadicCube::ancestor(p, j, l)).or_insert(0.0) += m;
        }
        for (c, s) in sums {
            if s / bound > worst.0 {
                worst = (s / bound, Some(c));
            }
        }
        if bound >= total {
            return worst;
        }
        j += 1;
    }
}

/// Points of `a` with a lattice neighbour outside `a`, by direct scan.
pub fn boundary_oracle(a: &LatticeSet) -> BTreeSet<Point> {
    a.iter().filter(|p| p.neighbors().any(|q| !a.contains(&q))).cloned().collect()
}
