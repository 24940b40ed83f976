use serde::{Deserialize, Serialize};

use super::cube::LadicCube;
use super::point::Point;
use super::set::LatticeBox;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeelMode {
    /// The start point lies outside the cube: strip outer shells of subcubes.
    Exterior,
    /// The start point lies inside: strip Chebyshev shells around its subcube,
    /// then outer shells once those reach the faces of the cube.
    Interior,
}

/// Nested regions `C_1 ⊃ C_2 ⊃ ... ⊃ C_lbar` of level-(j-1) subcubes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OnionLayers {
    pub parent: LadicCube,
    pub mode: PeelMode,
    /// Subcube index of the start point (interior mode).
    pub center: Option<Point>,
    /// For each subcube (lexicographic index order) the deepest layer `k` with
    /// the subcube inside `C_k`; 0 means it is in no layer.
    depth: Vec<u32>,
    pub lbar: u32,
}

/// `lbar = floor(l / 6)`.
pub fn layer_count(l: u64) -> u32 {
    (l / 6) as u32
}

fn ring(idx: &[i64], l: i64) -> i64 {
    idx.iter().map(|&i| i.min(l - 1 - i)).min().unwrap_or(0)
}

impl OnionLayers {
    pub fn peel(cube: &LadicCube, x: &Point) -> Result<OnionLayers> {
        if cube.level < 2 {
            return Err(Error::NoSubcubeStructure(cube.level));
        }
        let lbar = layer_count(cube.branching);
        if lbar < 2 {
            return Err(Error::LayerCountTooSmall(cube.branching));
        }
        let l = cube.branching as i64;
        let d = cube.dim();
        let (mode, center) = if cube.contains(x) {
            (PeelMode::Interior, Some(cube.child_index(x)))
        } else {
            (PeelMode::Exterior, None)
        };
        let center_ring = center.as_ref().map(|c| ring(c.coords(), l));
        let depth = LatticeBox::cube(Point::origin(d), l)
            .points()
            .map(|idx| {
                let r = ring(idx.coords(), l);
                let mut deepest = 0;
                for k in 1..=lbar as i64 {
                    let inside = match (&center, center_ring) {
                        (Some(c), Some(cr)) => {
                            let outer = (k - cr - 1).max(0);
                            idx.chebyshev(c) > k && r >= outer
                        }
                        _ => r >= k,
                    };
                    if inside {
                        deepest = k as u32;
                    } else {
                        break;
                    }
                }
                deepest
            })
            .collect();
        Ok(OnionLayers { parent: cube.clone(), mode, center, depth, lbar })
    }

    fn index_of(&self, idx: &Point) -> usize {
        let l = self.parent.branching as usize;
        idx.coords().iter().fold(0usize, |acc, &i| acc * l + i as usize)
    }

    /// Is the subcube with index `idx` part of layer `C_k`?
    pub fn in_layer(&self, idx: &Point, k: u32) -> bool {
        self.depth[self.index_of(idx)] >= k
    }

    pub fn contains_point(&self, p: &Point, k: u32) -> bool {
        self.parent.contains(p) && self.in_layer(&self.parent.child_index(p), k)
    }

    /// Number of subcubes in `C_k`.
    pub fn count(&self, k: u32) -> usize {
        self.depth.iter().filter(|&&dk| dk >= k).count()
    }

    /// Layer depth per subcube, in lexicographic index order.
    pub fn depths(&self) -> &[u32] {
        &self.depth
    }

    pub fn subcubes(&self, k: u32) -> Vec<LadicCube> {
        self.parent.children().into_iter().zip(&self.depth).filter(|(_, &dk)| dk >= k).map(|(c, _)| c).collect()
    }
}
