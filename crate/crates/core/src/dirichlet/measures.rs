//! Derived measures: conditioning on entrance, the measure from infinity,
//! general first-entrance probabilities and the Harnack ratio on balls.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeBox, LatticeSet, Point};

use super::exact::FarField;
use super::grid::{Grid, FREE};
use super::{HittingDistribution, SOLVER_TOL};

/// Entrance law conditioned on entering at all.
pub fn conditioned_measure(dist: &HittingDistribution) -> Result<HittingDistribution> {
    let hit = dist.hit_mass();
    if !(hit > 0.0) {
        return Err(Error::ZeroHitMass);
    }
    let mut out = dist.clone();
    for v in out.density.values_mut() {
        *v /= hit;
    }
    out.escaped_mass = 0.0;
    out.capped_mass = 0.0;
    out.ci = None;
    Ok(out)
}

/// Total variation distance between the densities of two laws.
pub fn total_variation(a: &HittingDistribution, b: &HittingDistribution) -> f64 {
    let mut s = 0.0;
    for (p, v) in &a.density {
        s += (v - b.get(p)).abs();
    }
    for (p, v) in &b.density {
        if !a.density.contains_key(p) {
            s += v.abs();
        }
    }
    0.5 * s
}

/// Radii for [`measure_from_infinity`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiusSchedule {
    /// First sphere radius; raised to the target diameter plus 2 if smaller.
    pub initial: f64,
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        RadiusSchedule { initial: 8.0, tolerance: 1e-3, max_doublings: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfinityResult {
    pub measure: HittingDistribution,
    pub radius: f64,
    pub sphere_points: usize,
    pub trace: Vec<f64>,
}

fn sphere(centre: &Point, radius: f64, target: &LatticeSet) -> Vec<Point> {
    let r = radius.ceil() as i64 + 1;
    let bx = LatticeBox::cube(centre.add(&Point::splat(centre.dim(), -r)), 2 * r + 1);
    bx.points()
        .filter(|p| (p.dist(centre) - radius).abs() <= 0.5 && !target.contains(p))
        .collect()
}

/// Average of the conditioned entrance laws over the lattice sphere of radius
/// `R` around the target, for `R` doubling until the total-variation change
/// drops below the schedule's tolerance.
///
/// Each radius costs one guard-box far-field context and one occupation solve:
/// the average of conditioned laws is the entrance law of the start mixture
/// weighted by `1 / P^x(tau_A < infinity)`.
pub fn measure_from_infinity(target: &LatticeSet, schedule: &RadiusSchedule) -> Result<InfinityResult> {
    let bb = target.bbox().ok_or(Error::EmptySet)?.clone();
    let dim = target.dim();
    let centre: Point = (0..dim).map(|a| (bb.lo.coords()[a] + bb.hi.coords()[a]).div_euclid(2)).collect::<Vec<_>>().into();
    let reach = target.iter().map(|p| p.dist(&centre)).fold(0.0, f64::max);
    let mut radius = schedule.initial.max(reach + 2.0);
    let mut trace = Vec::new();
    let mut prev: Option<HittingDistribution> = None;
    for _ in 0..=schedule.max_doublings {
        let pts = sphere(&centre, radius, target);
        let half = (2.0 * radius).ceil() as i64 + 1;
        let guard = LatticeBox::cube(centre.add(&Point::splat(dim, -half)), 2 * half + 1);
        let ff = FarField::new(target, &guard)?;
        let idx: Vec<usize> = pts.iter().map(|p| ff.grid.index(p).expect("sphere inside guard")).collect();
        let weights: Vec<(usize, f64)> = idx
            .iter()
            .map(|&i| (i, 1.0 / (pts.len() as f64 * ff.hit_probability(i).max(f64::MIN_POSITIVE))))
            .collect();
        let raw = ff.distribution(&weights, centre.clone())?;
        let measure = conditioned_measure(&raw)?;
        if let Some(p) = &prev {
            let tv = total_variation(p, &measure);
            trace.push(tv);
            if tv < schedule.tolerance {
                return Ok(InfinityResult { measure, radius, sphere_points: pts.len(), trace });
            }
        }
        prev = Some(measure);
        radius *= 2.0;
    }
    Err(Error::NoConvergence { doublings: schedule.max_doublings, trace })
}

/// Best constants in `C1 nu_x(y) <= nu_inf(y) <= C2 nu_x(y)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichReport {
    pub c1: f64,
    pub c2: f64,
    /// per start: (start, smallest ratio, largest ratio)
    pub per_start: Vec<(Point, f64, f64)>,
}

/// Scans ratios of the measure from infinity to conditioned entrance laws.
/// Only points charged by both laws enter the ratios.
pub fn sandwich_constants(infinity: &HittingDistribution, samples: &[HittingDistribution]) -> Result<SandwichReport> {
    let mut per_start = Vec::new();
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for s in samples {
        let cond = conditioned_measure(s)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (y, &v) in &infinity.density {
            let w = cond.get(y);
            if v > 0.0 && w > 0.0 {
                lo = lo.min(v / w);
                hi = hi.max(v / w);
            }
        }
        c1 = c1.min(lo);
        c2 = c2.max(hi);
        per_start.push((s.start.clone(), lo, hi));
    }
    Ok(SandwichReport { c1, c2, per_start })
}

/// Field of first-entrance probabilities on a box region.
///
/// Cells of `stopping` inside `region` are absorbing and so is everything
/// outside `region`; the value at a free cell is the probability that the
/// first absorbing point reached lies in `target`.
pub struct OmegaField {
    grid: Grid,
    values: Vec<f64>,
    stopping: LatticeSet,
    target: LatticeSet,
    region: LatticeBox,
    pub residual: f64,
}

impl OmegaField {
    pub fn new(region: &LatticeBox, stopping: &LatticeSet, target: &LatticeSet) -> Result<OmegaField> {
        if target.iter().any(|p| region.contains(p) && !stopping.contains(p)) {
            return Err(Error::TargetNotInStopping);
        }
        let grid = Grid::with_set(region, stopping);
        let (values, rep) = grid.harmonic_extension(|p| if target.contains(p) { 1.0 } else { 0.0 }, SOLVER_TOL)?;
        Ok(OmegaField {
            grid,
            values,
            stopping: stopping.clone(),
            target: target.clone(),
            region: region.clone(),
            residual: rep.residual,
        })
    }

    pub fn get(&self, x: &Point) -> f64 {
        if !self.region.contains(x) || self.stopping.contains(x) {
            return if self.target.contains(x) { 1.0 } else { 0.0 };
        }
        self.values[self.grid.index(x).expect("inside region")]
    }

    /// Largest deviation from the neighbour average over free cells.
    pub fn harmonicity_defect(&self) -> f64 {
        self.grid.harmonicity_defect(&self.values)
    }
}

/// `P^x(first entrance into stopping ∪ region^c lies in target)`.
///
/// The complement of `region` belongs to the stopping set, so `region` plays
/// the role of the cube `Q` in `P^a(tau_A < tau_{Q^c})`.
pub fn omega(region: &LatticeBox, stopping: &LatticeSet, target: &LatticeSet, x: &Point) -> Result<f64> {
    if target.iter().any(|p| region.contains(p) && !stopping.contains(p)) {
        return Err(Error::TargetNotInStopping);
    }
    if !region.contains(x) || stopping.contains(x) {
        return Ok(if target.contains(x) { 1.0 } else { 0.0 });
    }
    Ok(OmegaField::new(region, stopping, target)?.get(x))
}

/// Largest ratio `f(x1) / f(x2)` over `|x1|, |x2| <= n/2` among the exit
/// kernels `f = H_{B_n}(., w)` of the ball `B_n = {|z| < n}`. Every positive
/// harmonic function on `B_n` is a mixture of these kernels, so this is the
/// Harnack constant of the half ball.
pub fn harnack_ratio(dim: usize, n: i64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if n < 2 {
        return Err(invalid("n", "ball radius must be at least 2"));
    }
    let r2 = n * n;
    let bx = LatticeBox::cube(Point::splat(dim, -n), 2 * n + 1);
    let grid = Grid::new(&bx, |p| p.norm_sq() >= r2);
    let inner: Vec<usize> = bx
        .points()
        .filter(|p| 4 * p.norm_sq() <= r2)
        .map(|p| grid.index(&p).expect("inside box"))
        .collect();
    let exits: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.state_at(i) != FREE && grid.neighbors_checked(i).any(|j| grid.state_at(j) == FREE))
        .collect();
    let inv = 1.0 / (2 * dim) as f64;
    let mut worst = 1.0f64;
    for &w in &exits {
        let mut rhs = vec![0.0; grid.len()];
        for j in grid.neighbors_checked(w) {
            if grid.state_at(j) == FREE {
                rhs[j] += inv;
            }
        }
        let (h, _) = grid.solve(&rhs, SOLVER_TOL)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &i in &inner {
            lo = lo.min(h[i]);
            hi = hi.max(h[i]);
        }
        worst = worst.max(hi / lo);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::Method;

    fn set(dim: usize, pts: &[&[i64]]) -> LatticeSet {
        LatticeSet::from_points(dim, pts.iter().map(|c| Point::new(c))).unwrap()
    }

    #[test]
    fn conditioning_arithmetic() {
        let mut d = HittingDistribution::new(Point::from([9, 9]), Method::Exact);
        for (i, p) in [[0, 0], [1, 0], [2, 0], [3, 0]].iter().enumerate() {
            d.density.insert(Point::from(*p), 0.2 + 0.0 * i as f64);
        }
        d.escaped_mass = 0.2;
        let c = conditioned_measure(&d).unwrap();
        assert!((c.get(&Point::from([2, 0])) - 0.25).abs() < 1e-15);
        assert_eq!(c.escaped_mass, 0.0);

        let mut z = HittingDistribution::new(Point::from([9, 9]), Method::Exact);
        z.escaped_mass = 1.0;
        assert!(matches!(conditioned_measure(&z), Err(Error::ZeroHitMass)));
    }

    #[test]
    fn infinity_of_a_point() {
        let a = set(2, &[&[3, 4]]);
        let r = measure_from_infinity(&a, &RadiusSchedule::default()).unwrap();
        assert_eq!(r.measure.get(&Point::from([3, 4])), 1.0);
    }

    #[test]
    fn omega_complement_consistency() {
        // Q = {0..7}^2 with its left edge as the target set
        let q = LatticeBox::cube(Point::from([0, 0]), 8);
        let a = LatticeSet::from_points(2, (0..8).map(|y| Point::from([0, y]))).unwrap();
        let centre = Point::from([4, 4]);
        let direct = omega(&q, &a, &a, &centre).unwrap();
        let none = omega(&q, &a, &LatticeSet::empty(2), &centre).unwrap();
        assert_eq!(none, 0.0);
        let f = OmegaField::new(&q, &a, &a).unwrap();
        assert!(f.harmonicity_defect() < 1e-12);
        assert!(direct > 0.0 && direct < 0.5);
        // the whole stopping set: left edge plus outside of Q
        let outer = q.outer_boundary();
        let all = a.union(&outer).unwrap();
        let total = omega(&q, &a, &all, &centre).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        let rest = omega(&q, &a, &outer, &centre).unwrap();
        assert!((direct + rest - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega_trivial_cases() {
        let q = LatticeBox::cube(Point::from([0, 0]), 6);
        let a = set(2, &[&[2, 2]]);
        assert_eq!(omega(&q, &a, &a, &Point::from([2, 2])).unwrap(), 1.0);
        let b = set(2, &[&[3, 3]]);
        assert!(matches!(omega(&q, &a, &b, &Point::from([1, 1])), Err(Error::TargetNotInStopping)));
    }

    #[test]
    fn harnack_ratio_stabilizes() {
        let r8 = harnack_ratio(2, 8).unwrap();
        let r16 = harnack_ratio(2, 16).unwrap();
        assert!(r8 > 1.0 && r16 > 1.0);
        assert!((r8 / r16 - 1.0).abs() < 0.5, "{r8} {r16}");
    }
}
