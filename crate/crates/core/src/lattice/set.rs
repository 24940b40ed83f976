use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::point::Point;
use crate::error::{invalid, Error, Result};

/// Axis-aligned box `lo..=hi` (both corners inclusive).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub lo: Point,
    pub hi: Point,
}

impl LatticeBox {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
            return Err(invalid("box", format!("lo {lo} exceeds hi {hi}")));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// The cube `{lo_i <= z_i < lo_i + side}`.
    pub fn cube(lo: Point, side: i64) -> Self {
        let hi = Point::new(&lo.coords().iter().map(|c| c + side - 1).collect::<Vec<_>>());
        LatticeBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn side(&self, axis: usize) -> i64 {
        self.hi.coords()[axis] - self.lo.coords()[axis] + 1
    }

    pub fn sides(&self) -> Vec<i64> {
        (0..self.dim()).map(|a| self.side(a)).collect()
    }

    pub fn max_side(&self) -> i64 {
        (0..self.dim()).map(|a| self.side(a)).max().unwrap_or(0)
    }

    pub fn volume(&self) -> u64 {
        (0..self.dim()).map(|a| self.side(a) as u64).product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.coords()
            .iter()
            .zip(self.lo.coords().iter().zip(self.hi.coords()))
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Grows the box by `margin` on every face.
    pub fn expand(&self, margin: i64) -> LatticeBox {
        let lo = self.lo.coords().iter().map(|c| c - margin).collect::<Vec<_>>();
        let hi = self.hi.coords().iter().map(|c| c + margin).collect::<Vec<_>>();
        LatticeBox { lo: lo.into(), hi: hi.into() }
    }

    pub fn intersect(&self, other: &LatticeBox) -> Option<LatticeBox> {
        let lo: Vec<i64> = self.lo.coords().iter().zip(other.lo.coords()).map(|(a, b)| *a.max(b)).collect();
        let hi: Vec<i64> = self.hi.coords().iter().zip(other.hi.coords()).map(|(a, b)| *a.min(b)).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            None
        } else {
            Some(LatticeBox { lo: lo.into(), hi: hi.into() })
        }
    }

    /// Lexicographic iteration over all points (last axis fastest).
    pub fn points(&self) -> BoxPoints<'_> {
        BoxPoints { bx: self, next: Some(self.lo.clone()) }
    }

    /// Points outside the box at distance one from it (the exterior boundary).
    pub fn outer_boundary(&self) -> LatticeSet {
        let grown = self.expand(1);
        let pts = grown.points().filter(|p| {
            !self.contains(p) && p.neighbors().any(|q| self.contains(&q))
        });
        LatticeSet::from_points(self.dim(), pts).expect("dimension is consistent")
    }
}

pub struct BoxPoints<'a> {
    bx: &'a LatticeBox,
    next: Option<Point>,
}

impl Iterator for BoxPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let d = succ.dim();
        let mut axis = d;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            let c = &mut succ.coords_mut()[axis];
            if *c < self.bx.hi.coords()[axis] {
                *c += 1;
                self.next = Some(succ);
                return Some(cur);
            }
            *c = self.bx.lo.coords()[axis];
        }
        Some(cur)
    }
}

/// Euclidean lattice ball `{x : |x - center| <= radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeBall {
    pub center: Point,
    pub radius: f64,
}

impl LatticeBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(invalid("radius", format!("{radius} is negative")));
        }
        Ok(LatticeBall { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p.sub(&self.center).norm_sq() as f64) <= self.radius * self.radius + 1e-9
    }

    pub fn bounding_box(&self) -> LatticeBox {
        LatticeBox::cube(self.center.clone(), 1).expand(self.radius.floor() as i64)
    }

    /// Exact lattice point count.
    pub fn cardinality(&self) -> u64 {
        ball_count(self.center.dim(), self.radius)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let bb = self.bounding_box();
        let pts: Vec<Point> = bb.points().filter(|p| self.contains(p)).collect();
        pts.into_iter()
    }
}

/// Number of lattice points within Euclidean distance `radius` of the origin.
pub fn ball_count(dim: usize, radius: f64) -> u64 {
    let r2 = radius * radius + 1e-9;
    let r = radius.floor() as i64;
    fn rec(dim: usize, r: i64, left: f64) -> u64 {
        if dim == 0 {
            return 1;
        }
        let mut total = 0;
        for c in -r..=r {
            let rest = left - (c * c) as f64;
            if rest >= 0.0 {
                total += rec(dim - 1, r, rest);
            }
        }
        total
    }
    rec(dim, r, r2)
}

/// A finite subset of Z^d.
///
/// Points are held both as a sorted vector (deterministic iteration) and a
/// hash index (exact O(1) membership). The set is immutable once built.
#[derive(Clone, Debug)]
pub struct LatticeSet {
    dim: usize,
    points: Vec<Point>,
    index: HashSet<Point>,
    bbox: Option<LatticeBox>,
}

impl PartialEq for LatticeSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl LatticeSet {
    pub fn empty(dim: usize) -> Self {
        LatticeSet { dim, points: Vec::new(), index: HashSet::new(), bbox: None }
    }

    pub fn from_points(dim: usize, pts: impl IntoIterator<Item = Point>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut points: Vec<Point> = pts.into_iter().collect();
        if let Some(bad) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.dim() });
        }
        points.sort_unstable();
        points.dedup();
        let index = points.iter().cloned().collect();
        let bbox = tight_bbox(dim, &points);
        Ok(LatticeSet { dim, points, index, bbox })
    }

    pub fn singleton(p: Point) -> Self {
        let dim = p.dim();
        LatticeSet::from_points(dim, [p]).expect("valid singleton")
    }

    pub fn from_box(bx: &LatticeBox) -> Self {
        LatticeSet::from_points(bx.dim(), bx.points()).expect("valid box")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.index.contains(p)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Tight bounding box; `None` for the empty set.
    pub fn bbox(&self) -> Option<&LatticeBox> {
        self.bbox.as_ref()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Point) -> bool) -> LatticeSet {
        let pts = self.points.iter().filter(|p| keep(p)).cloned();
        LatticeSet::from_points(self.dim, pts).expect("subset of a valid set")
    }

    pub fn restrict(&self, bx: &LatticeBox) -> LatticeSet {
        self.filter(|p| bx.contains(p))
    }

    pub fn union(&self, other: &LatticeSet) -> Result<LatticeSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        LatticeSet::from_points(self.dim, self.points.iter().chain(other.points.iter()).cloned())
    }

    pub fn difference(&self, other: &LatticeSet) -> LatticeSet {
        self.filter(|p| !other.contains(p))
    }

    pub fn is_subset(&self, other: &LatticeSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn translate(&self, by: &Point) -> LatticeSet {
        LatticeSet::from_points(self.dim, self.points.iter().map(|p| p.add(by))).expect("translation keeps dimension")
    }

    /// Side of the smallest cube `{1..n}^d` translate containing the set.
    pub fn extent(&self) -> i64 {
        self.bbox.as_ref().map(|b| b.max_side()).unwrap_or(0)
    }

    /// Points of the set with at least one nearest neighbour outside it.
    pub fn boundary(&self) -> Result<LatticeSet> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(self.filter(|p| p.neighbors().any(|q| !self.contains(&q))))
    }

    /// Points outside the set adjacent to it.
    pub fn outer_boundary(&self) -> LatticeSet {
        let pts = self
            .points
            .iter()
            .flat_map(|p| p.neighbors().collect::<Vec<_>>())
            .filter(|q| !self.contains(q));
        LatticeSet::from_points(self.dim, pts).expect("neighbours keep dimension")
    }
}

fn tight_bbox(dim: usize, points: &[Point]) -> Option<LatticeBox> {
    let first = points.first()?;
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for a in 0..dim {
            let c = p.coords()[a];
            if c < lo.coords()[a] {
                lo.coords_mut()[a] = c;
            }
            if c > hi.coords()[a] {
                hi.coords_mut()[a] = c;
            }
        }
    }
    Some(LatticeBox { lo, hi })
}
