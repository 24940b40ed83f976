//! Discrete Hausdorff contents and Frostman measures.
//!
//! `m_rho` covers by cubes of the l-adic net and is computed exactly by
//! dynamic programming; `h_rho` covers by lattice balls and is bracketed by
//! `m_rho` through explicit constants, with a brute-force search for toy sets.
//!
//! Constants, for lattice balls `{z : |z - c| <= r}` with `c` in Z^d:
//!
//! * [`t1`] `= (1 + sqrt d)^d`: a cube of side `s` sits in the ball of radius
//!   `sqrt(d) s / 2` around a lattice point near its centre, which has at most
//!   `(sqrt(d) s + 1)^d <= ((1 + sqrt d) s)^d` points.
//! * [`t2`] `= 8^d l^(d - rho)`.
//! * [`t3`] `= 2^d (l (2 sqrt d + 1))^rho`: a ball of radius `r` spans at most
//!   `2r + 1` integers per axis, so it meets at most `2^d` cubes of the first
//!   level `j` with `l^j >= 2r + 1`, each of mass at most `l^(j rho)`; and
//!   `|B|^(1/d) >= (2r + 1) / (2 sqrt d + 1)` because the ball contains the
//!   cube of half-side `floor(r / sqrt d)`. Unlike `t1` this depends on `l`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::lattice::{LadicCube, LatticeBall, Point};
use crate::Result;

mod content;
mod frostman;

pub use content::{h_rho_bounds, h_rho_brute_force, m_rho, HBounds};
pub use frostman::{extract_saturated_cover, frostman_measure, max_ball_ratio, max_cube_ratio, Frostman};

/// Relative slack on saturation comparisons.
pub const SATURATION_SLACK: f64 = 1e-12;

pub fn t1(d: usize) -> f64 {
    (1.0 + (d as f64).sqrt()).powi(d as i32)
}

pub fn t2(d: usize, l: u64, rho: f64) -> f64 {
    8f64.powi(d as i32) * (l as f64).powf(d as f64 - rho)
}

pub fn t3(d: usize, l: u64, rho: f64) -> f64 {
    2f64.powi(d as i32) * (l as f64 * (2.0 * (d as f64).sqrt() + 1.0)).powf(rho)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covering {
    Cubes(Vec<LadicCube>),
    Balls(Vec<LatticeBall>),
}

impl Covering {
    pub fn len(&self) -> usize {
        match self {
            Covering::Cubes(c) => c.len(),
            Covering::Balls(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn covers(&self, p: &Point) -> bool {
        match self {
            Covering::Cubes(c) => c.iter().any(|q| q.contains(p)),
            Covering::Balls(b) => b.iter().any(|q| q.contains(p)),
        }
    }
}

/// Value of a content together with a cover realizing it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentResult {
    pub value: f64,
    pub rho: f64,
    pub l: Option<u64>,
    pub covering: Covering,
    pub exact: bool,
}

/// Nonnegative point masses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub mass: BTreeMap<Point, f64>,
}

impl DiscreteMeasure {
    pub fn get(&self, p: &Point) -> f64 {
        self.mass.get(p).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn of_cube(&self, c: &LadicCube) -> f64 {
        self.mass.iter().filter(|(p, _)| c.contains(p)).map(|(_, m)| m).sum()
    }

    pub fn support(&self) -> Vec<Point> {
        self.mass.iter().filter(|(_, &m)| m > 0.0).map(|(p, _)| p.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "point,mass")?;
        for (p, m) in &self.mass {
            writeln!(w, "\"{}\",{:e}", p, m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((t1(2) - (1.0 + 2f64.sqrt()).powi(2)).abs() < 1e-12);
        assert_eq!(t2(2, 8, 2.0), 64.0);
        assert!((t3(2, 4, 1.0) - 4.0 * 4.0 * (2.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
    }
}
