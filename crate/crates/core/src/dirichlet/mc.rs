//! Monte Carlo first-entrance sampling.
//!
//! Every walk draws from its own ChaCha8 stream: the generator is seeded with
//! the batch seed and walk `i` uses stream `i`. Results therefore do not depend
//! on scheduling, and batches merge by adding counts.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{LatticeBox, Point};

use super::grid::{Grid, ABSORB, EXIT};
use super::{HittingDistribution, HittingProblem, Interval, Method};

/// z-score of the reported intervals (99.7% two-sided).
pub const CI_Z: f64 = 3.0;

const WALKS_PER_TASK: u64 = 512;

/// Outcome counts of a batch of walks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalkBatch {
    pub seed: u64,
    pub n_walks: u64,
    pub max_steps: u64,
    pub hits: BTreeMap<Point, u64>,
    pub escaped: u64,
    pub capped: u64,
}

impl WalkBatch {
    pub fn hit_count(&self) -> u64 {
        self.hits.values().sum()
    }

    /// Wilson interval for the entrance probability at `y`.
    pub fn interval(&self, y: &Point) -> Interval {
        wilson_interval(self.hits.get(y).copied().unwrap_or(0), self.n_walks, CI_Z)
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval { lo: (centre - half).max(0.0), hi: (centre + half).min(1.0) }
}

/// Runs `n_walks` walks from `x` on `guard`, absorbing on `target` points and
/// counting departures from the box as escapes.
pub fn simulate(problem: &HittingProblem, guard: &LatticeBox, seed: u64, n_walks: u64, max_steps: u64) -> Result<WalkBatch> {
    if n_walks == 0 {
        return Err(invalid("n_walks", "must be at least 1"));
    }
    let x = &problem.start;
    if !guard.contains(x) {
        return Err(crate::Error::StartOutsideGuard(x.to_string()));
    }
    let grid = Grid::with_set(guard, &problem.target);
    let start = grid.index(x).expect("start inside guard");
    let dirs: Vec<isize> = grid.offsets.iter().flat_map(|&s| [-(s as isize), s as isize]).collect();
    let tasks = n_walks.div_ceil(WALKS_PER_TASK);
    let partial: Vec<(HashMap<usize, u64>, u64, u64)> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut hits = HashMap::new();
            let (mut escaped, mut capped) = (0u64, 0u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for w in t * WALKS_PER_TASK..((t + 1) * WALKS_PER_TASK).min(n_walks) {
                rng.set_stream(w);
                rng.set_word_pos(0);
                let mut pos = start;
                let mut steps = 0u64;
                loop {
                    match grid.state_at(pos) {
                        ABSORB => {
                            *hits.entry(pos).or_insert(0) += 1;
                            break;
                        }
                        EXIT => {
                            escaped += 1;
                            break;
                        }
                        _ => {}
                    }
                    if steps >= max_steps {
                        capped += 1;
                        break;
                    }
                    let k = rng.gen_range(0..dirs.len());
                    pos = (pos as isize + dirs[k]) as usize;
                    steps += 1;
                }
            }
            (hits, escaped, capped)
        })
        .collect();
    let mut batch =
        WalkBatch { seed, n_walks, max_steps, hits: BTreeMap::new(), escaped: 0, capped: 0 };
    for (hits, e, c) in partial {
        for (i, k) in hits {
            *batch.hits.entry(grid.point(i)).or_insert(0) += k;
        }
        batch.escaped += e;
        batch.capped += c;
    }
    Ok(batch)
}

/// Planar walks on the whole lattice: every walk ends by hitting the target or
/// by reaching `max_steps`, so `escaped` is always zero.
pub fn simulate_planar(problem: &HittingProblem, seed: u64, n_walks: u64, max_steps: u64) -> Result<WalkBatch> {
    if n_walks == 0 {
        return Err(invalid("n_walks", "must be at least 1"));
    }
    if problem.dim() != 2 {
        return Err(crate::Error::DimensionMismatch { expected: 2, got: problem.dim() });
    }
    let bx = problem.target.bbox().expect("target is nonempty");
    let (x0, y0) = (bx.lo.coords()[0], bx.lo.coords()[1]);
    let (w, h) = (bx.side(0), bx.side(1));
    let mut mask = vec![false; (w * h) as usize];
    for p in problem.target.iter() {
        mask[((p.coords()[0] - x0) * h + p.coords()[1] - y0) as usize] = true;
    }
    let inside = |x: i64, y: i64| {
        let (i, j) = (x - x0, y - y0);
        i >= 0 && j >= 0 && i < w && j < h && mask[(i * h + j) as usize]
    };
    let (sx, sy) = (problem.start.coords()[0], problem.start.coords()[1]);
    let tasks = n_walks.div_ceil(WALKS_PER_TASK);
    let partial: Vec<(HashMap<(i64, i64), u64>, u64)> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut hits = HashMap::new();
            let mut capped = 0u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for walk in t * WALKS_PER_TASK..((t + 1) * WALKS_PER_TASK).min(n_walks) {
                rng.set_stream(walk);
                rng.set_word_pos(0);
                let (mut x, mut y) = (sx, sy);
                let mut steps = 0u64;
                loop {
                    if inside(x, y) {
                        *hits.entry((x, y)).or_insert(0) += 1;
                        break;
                    }
                    if steps >= max_steps {
                        capped += 1;
                        break;
                    }
                    match rng.gen_range(0..4u8) {
                        0 => x -= 1,
                        1 => x += 1,
                        2 => y -= 1,
                        _ => y += 1,
                    }
                    steps += 1;
                }
            }
            (hits, capped)
        })
        .collect();
    let mut batch = WalkBatch { seed, n_walks, max_steps, hits: BTreeMap::new(), escaped: 0, capped: 0 };
    for (hits, c) in partial {
        for ((x, y), k) in hits {
            *batch.hits.entry(Point::from([x, y])).or_insert(0) += k;
        }
        batch.capped += c;
    }
    Ok(batch)
}

/// Empirical entrance distribution. Planar walks run on the whole lattice
/// until they hit or reach `max_steps`; in higher dimensions walks leaving
/// the problem's first guard box count as escaped.
///
/// Intervals are Wilson intervals at [`CI_Z`] for every boundary point of the
/// target (or for the start, when it lies in the target). Capped walks are
/// reported separately from escapes.
pub fn mc_hitting(problem: &HittingProblem, seed: u64, n_walks: u64, max_steps: u64) -> Result<HittingDistribution> {
    let (batch, guard) = if problem.dim() == 2 {
        (simulate_planar(problem, seed, n_walks, max_steps)?, None)
    } else {
        let guard = problem.initial_guard();
        (simulate(problem, &guard, seed, n_walks, max_steps)?, Some(guard))
    };
    let n = n_walks as f64;
    let mut d = HittingDistribution::new(problem.start.clone(), Method::MonteCarlo);
    for (p, &k) in &batch.hits {
        d.density.insert(p.clone(), k as f64 / n);
    }
    d.escaped_mass = batch.escaped as f64 / n;
    d.capped_mass = batch.capped as f64 / n;
    d.guard_used = guard;
    let candidates: Vec<Point> = if problem.target.contains(&problem.start) {
        vec![problem.start.clone()]
    } else {
        problem.target.boundary()?.points().to_vec()
    };
    d.ci = Some(candidates.into_iter().map(|y| (y.clone(), batch.interval(&y))).collect());
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSet;

    #[test]
    fn wilson_contains_estimate() {
        let i = wilson_interval(30, 100, CI_Z);
        assert!(i.contains(0.3) && i.lo > 0.1 && i.hi < 0.5);
        let z = wilson_interval(0, 1000, CI_Z);
        assert_eq!(z.lo, 0.0);
        assert!((z.hi - 9.0 / 1009.0).abs() < 1e-12);
    }

    #[test]
    fn walk_started_in_target_hits_at_once() {
        let a = LatticeSet::from_points(2, [Point::from([0, 0])]).unwrap();
        let p = HittingProblem::new(a, Point::from([0, 0])).unwrap();
        let d = mc_hitting(&p, 7, 1, 10).unwrap();
        assert_eq!(d.get(&Point::from([0, 0])), 1.0);
    }

    #[test]
    fn reproducible_and_conserving() {
        let a = LatticeSet::from_points(2, [Point::from([0, 0]), Point::from([2, 0])]).unwrap();
        let p = HittingProblem::new(a, Point::from([1, 1])).unwrap();
        let d1 = mc_hitting(&p, 42, 3000, 50).unwrap();
        let d2 = mc_hitting(&p, 42, 3000, 50).unwrap();
        assert_eq!(d1.density, d2.density);
        assert!(d1.capped_mass > 0.0);
        assert!((d1.total() - 1.0).abs() < 1e-12);
        let d3 = mc_hitting(&p, 43, 3000, 50).unwrap();
        assert_ne!(d1.density, d3.density);
    }

    #[test]
    fn planar_walks_never_escape() {
        let a = LatticeSet::from_points(2, [Point::from([-1, 0]), Point::from([1, 0])]).unwrap();
        let p = HittingProblem::new(a, Point::from([0, 5])).unwrap();
        let d = mc_hitting(&p, 1, 2000, 100_000).unwrap();
        assert_eq!(d.escaped_mass, 0.0);
        assert!(d.capped_mass > 0.0 && d.capped_mass < 0.5);
        let left = d.get(&Point::from([-1, 0])) / d.hit_mass();
        assert!((left - 0.5).abs() < 0.05, "{left}");
    }
}
