use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Coords = SmallVec<[i64; 4]>;

/// A point of the integer lattice Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(Coords);

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(SmallVec::from_elem(0, dim))
    }

    /// The point with every coordinate equal to `value`.
    pub fn splat(dim: usize, value: i64) -> Self {
        Point(SmallVec::from_elem(value, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }

    pub fn with(&self, axis: usize, value: i64) -> Self {
        let mut p = self.clone();
        p.0[axis] = value;
        p
    }

    pub fn offset(&self, axis: usize, delta: i64) -> Self {
        let mut p = self.clone();
        p.0[axis] += delta;
        p
    }

    pub fn add(&self, other: &Point) -> Self {
        Point(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Self {
        Point(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    /// The 2d nearest neighbours, in the order -e_1, +e_1, -e_2, +e_2, ...
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.dim()).flat_map(move |axis| [self.offset(axis, -1), self.offset(axis, 1)])
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn chebyshev(&self, other: &Point) -> i64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).max().unwrap_or(0)
    }

    /// Representative of the hyperoctahedral orbit: absolute values sorted descending.
    pub fn canonical(&self) -> Point {
        let mut c: Coords = self.0.iter().map(|x| x.abs()).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        Point(c)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Point {
    type Err = Error;

    /// Parses `1,2,3`, `1 2 3` or `(1, 2, 3)`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
            .collect::<Result<Coords>>()?;
        if coords.is_empty() {
            return Err(Error::Parse(format!("no coordinates in `{s}`")));
        }
        Ok(Point(coords))
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(v: [i64; N]) -> Self {
        Point::new(&v)
    }
}
