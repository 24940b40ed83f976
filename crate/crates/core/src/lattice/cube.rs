use serde::{Deserialize, Serialize};

use super::point::Point;
use super::set::LatticeBox;
use crate::error::{invalid, Result};

/// A cube of the l-adic net at some level j: `{z : k_i l^j <= z_i < (k_i+1) l^j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LadicCube {
    pub level: u32,
    pub corner: Point,
    pub branching: u64,
}

pub(crate) fn pow(l: u64, j: u32) -> i64 {
    (l as i64).checked_pow(j).expect("l^j overflows i64")
}

impl LadicCube {
    /// The unique level-`j` cube containing `p`. Corners use floor division, so
    /// negative coordinates map to the cube below zero.
    pub fn ancestor(p: &Point, j: u32, l: u64) -> LadicCube {
        let side = pow(l, j);
        let corner: Vec<i64> = p.coords().iter().map(|c| c.div_euclid(side) * side).collect();
        LadicCube { level: j, corner: corner.into(), branching: l }
    }

    pub fn new(level: u32, corner: Point, l: u64) -> Result<Self> {
        if l < 2 {
            return Err(invalid("l", format!("branching {l} < 2")));
        }
        let side = pow(l, level);
        if corner.coords().iter().any(|c| c.rem_euclid(side) != 0) {
            return Err(invalid("corner", format!("{corner} is not a multiple of {side}")));
        }
        Ok(LadicCube { level, corner, branching: l })
    }

    pub fn dim(&self) -> usize {
        self.corner.dim()
    }

    pub fn side(&self) -> i64 {
        pow(self.branching, self.level)
    }

    /// Number of lattice points, `l^{jd}`.
    pub fn volume(&self) -> f64 {
        (self.side() as f64).powi(self.dim() as i32)
    }

    /// `|C|^{rho/d} = l^{j rho}`.
    pub fn content_weight(&self, rho: f64) -> f64 {
        (self.branching as f64).powf(self.level as f64 * rho)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let s = self.side();
        p.coords().iter().zip(self.corner.coords()).all(|(c, k)| *k <= *c && *c < k + s)
    }

    pub fn contains_cube(&self, other: &LadicCube) -> bool {
        other.level <= self.level && self.contains(&other.corner)
    }

    pub fn to_box(&self) -> LatticeBox {
        LatticeBox::cube(self.corner.clone(), self.side())
    }

    pub fn parent(&self) -> LadicCube {
        LadicCube::ancestor(&self.corner, self.level + 1, self.branching)
    }

    /// The `l^d` level-(j-1) subcubes, lexicographic in subcube index.
    pub fn children(&self) -> Vec<LadicCube> {
        assert!(self.level > 0, "level-0 cubes have no children");
        let l = self.branching as i64;
        let sub = pow(self.branching, self.level - 1);
        let d = self.dim();
        let idx_box = LatticeBox::cube(Point::origin(d), l);
        idx_box
            .points()
            .map(|idx| {
                let corner: Vec<i64> =
                    idx.coords().iter().zip(self.corner.coords()).map(|(i, k)| k + i * sub).collect();
                LadicCube { level: self.level - 1, corner: corner.into(), branching: self.branching }
            })
            .collect()
    }

    /// Index of the level-(j-1) subcube containing `p`, in `[0, l)^d`.
    pub fn child_index(&self, p: &Point) -> Point {
        let sub = pow(self.branching, self.level - 1);
        let idx: Vec<i64> = p.coords().iter().zip(self.corner.coords()).map(|(c, k)| (c - k).div_euclid(sub)).collect();
        idx.into()
    }

    pub fn child_at(&self, index: &Point) -> LadicCube {
        let sub = pow(self.branching, self.level - 1);
        let corner: Vec<i64> = index.coords().iter().zip(self.corner.coords()).map(|(i, k)| k + i * sub).collect();
        LadicCube { level: self.level - 1, corner: corner.into(), branching: self.branching }
    }
}
