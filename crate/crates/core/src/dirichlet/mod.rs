//! First-entrance distributions of simple random walk.
//!
//! Three independent routes are provided: guard-box linear solves
//! ([`solve_hitting`], [`solve_truncated`]), dense kernel algebra on the
//! infinite lattice ([`kernel_hitting`]) and Monte Carlo ([`mc_hitting`]).

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeBox, LatticeSet, Point};

mod exact;
mod grid;
mod kernel;
mod mc;
mod measures;
mod mg;
mod stencil;

pub use exact::{solve_hitting, solve_truncated};
pub use grid::{CgReport, Grid};
pub use kernel::{kernel_from_infinity, kernel_hitting, KernelSolver};
pub use mc::{mc_hitting, simulate, simulate_planar, wilson_interval, WalkBatch, CI_Z};
pub use measures::{
    conditioned_measure, harnack_ratio, measure_from_infinity, omega, sandwich_constants, total_variation,
    InfinityResult, OmegaField, RadiusSchedule, SandwichReport,
};

pub(crate) const SOLVER_TOL: f64 = 1e-12;

/// A first-entrance problem: walk from `start` until it enters `target`.
#[derive(Clone, Debug)]
pub struct HittingProblem {
    pub target: LatticeSet,
    pub start: Point,
    /// Side of the first guard box relative to the hull of target and start.
    pub margin: f64,
    /// Stopping threshold on the total-variation change between boxes.
    pub tolerance: f64,
    pub max_doublings: usize,
    /// Largest guard box (in lattice points) the doubling loop may use.
    pub max_cells: u64,
    /// Explicit first guard box; overrides `margin` when set.
    pub guard: Option<LatticeBox>,
}

impl HittingProblem {
    pub fn new(target: LatticeSet, start: Point) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::EmptySet);
        }
        if target.dim() != start.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), got: start.dim() });
        }
        Ok(HittingProblem { target, start, margin: 2.0, tolerance: 1e-6, max_doublings: 8, max_cells: 1 << 24, guard: None })
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin >= 2.0) {
            return Err(invalid("margin", "must be at least 2"));
        }
        self.margin = margin;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(invalid("tolerance", "must be positive"));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_max_doublings(mut self, n: usize) -> Self {
        self.max_doublings = n;
        self
    }

    pub fn with_max_cells(mut self, n: u64) -> Self {
        self.max_cells = n;
        self
    }

    pub fn with_guard(mut self, guard: LatticeBox) -> Result<Self> {
        let hull = self.hull();
        if !guard.contains_box(&hull) {
            return Err(Error::StartOutsideGuard(self.start.to_string()));
        }
        self.guard = Some(guard);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Bounding box of the target together with the start point.
    pub fn hull(&self) -> LatticeBox {
        let bb = self.target.bbox().expect("nonempty target");
        let lo: Vec<i64> = (0..self.dim()).map(|a| bb.lo.coords()[a].min(self.start.coords()[a])).collect();
        let hi: Vec<i64> = (0..self.dim()).map(|a| bb.hi.coords()[a].max(self.start.coords()[a])).collect();
        LatticeBox::new(lo.into(), hi.into()).expect("ordered corners")
    }

    /// Cube centred on the hull with side `factor` times the hull side (at
    /// least 4).
    pub fn guard_box(&self, factor: f64) -> LatticeBox {
        let hull = self.hull();
        let side = (factor * hull.max_side().max(4) as f64).ceil() as i64;
        let half = (side + 1) / 2;
        let lo: Vec<i64> =
            (0..self.dim()).map(|a| (hull.lo.coords()[a] + hull.hi.coords()[a]).div_euclid(2) - half).collect();
        let bx = LatticeBox::cube(lo.into(), 2 * half + 1);
        debug_assert!(bx.contains_box(&hull));
        bx
    }

    /// First guard box of the doubling loop.
    pub fn initial_guard(&self) -> LatticeBox {
        self.guard.clone().unwrap_or_else(|| self.guard_box(self.margin))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    /// grid solves on the last two guard boxes, extrapolated in the box size
    Extrapolated,
    Kernel,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Extrapolated => "extrapolated",
            Method::Kernel => "kernel",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Sub-probability density of the first-entrance point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HittingDistribution {
    pub start: Point,
    pub density: BTreeMap<Point, f64>,
    pub escaped_mass: f64,
    /// Monte Carlo walks stopped by the step cap.
    pub capped_mass: f64,
    pub guard_used: Option<LatticeBox>,
    pub method: Method,
    pub ci: Option<BTreeMap<Point, Interval>>,
    pub residual: f64,
    /// Mass lost to the guard box before the far-field correction.
    pub truncated_escape: Option<f64>,
    /// Total-variation changes between successive guard boxes.
    pub trace: Vec<f64>,
}

impl HittingDistribution {
    pub(crate) fn new(start: Point, method: Method) -> Self {
        HittingDistribution {
            start,
            density: BTreeMap::new(),
            escaped_mass: 0.0,
            capped_mass: 0.0,
            guard_used: None,
            method,
            ci: None,
            residual: 0.0,
            truncated_escape: None,
            trace: Vec::new(),
        }
    }

    pub(crate) fn point_mass(start: Point, method: Method) -> Self {
        let mut d = Self::new(start.clone(), method);
        d.density.insert(start, 1.0);
        d
    }

    pub fn get(&self, y: &Point) -> f64 {
        self.density.get(y).copied().unwrap_or(0.0)
    }

    pub fn hit_mass(&self) -> f64 {
        self.density.values().sum()
    }

    pub fn total(&self) -> f64 {
        self.hit_mass() + self.escaped_mass + self.capped_mass
    }

    /// Points with strictly positive density.
    pub fn support(&self) -> Vec<Point> {
        self.density.iter().filter(|(_, &v)| v > 0.0).map(|(p, _)| p.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.density.iter().map(|(p, &v)| (p, v))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let guard = match &self.guard_used {
            Some(b) => format!("{}..{}", b.lo, b.hi),
            None => "none".into(),
        };
        writeln!(
            w,
            "# escaped_mass={:e} capped_mass={:e} guard={} method={} residual={:e}",
            self.escaped_mass, self.capped_mass, guard, self.method, self.residual
        )?;
        writeln!(w, "point,density,ci")?;
        for (p, v) in &self.density {
            let ci = self.ci.as_ref().and_then(|c| c.get(p)).map(|i| format!("{:e}", i.half_width())).unwrap_or_default();
            writeln!(w, "\"{}\",{:e},{}", p, v, ci)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_box_contains_hull() {
        let a = LatticeSet::from_points(2, [Point::from([0, 0]), Point::from([5, 1])]).unwrap();
        let p = HittingProblem::new(a, Point::from([-3, 2])).unwrap();
        for f in [2.0, 4.0, 8.0] {
            let g = p.guard_box(f);
            assert!(g.contains_box(&p.hull()));
            assert!(g.side(0) as f64 >= f * 9.0);
        }
        assert!(p.clone().with_margin(1.5).is_err());
    }

    #[test]
    fn csv_has_metadata_row() {
        let mut d = HittingDistribution::point_mass(Point::from([1, 2]), Method::Exact);
        d.guard_used = Some(LatticeBox::cube(Point::from([0, 0]), 4));
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# escaped_mass=0e0"));
        assert!(s.contains("\"1,2\",1e0,"));
    }
}
