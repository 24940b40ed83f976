use serde::Serialize;

use super::cantor::CantorSet;
use crate::error::{invalid, Error, Result};
use crate::lattice::Point;

/// Chain of cylinder centres `z_0, ..., z_{j0-1}` from a boundary point `y`
/// towards the centre `x_K`, with the lower bound it predicts for
/// `nu_{A_K, x_K}(y)`.
#[derive(Clone, Debug, Serialize)]
pub struct HarnackChain {
    pub y: Point,
    /// depth of the gap `y` borders; 0 when `y` only faces the outside of the cube
    pub j0: u32,
    pub points: Vec<Point>,
    /// `|z_i - z_{i-1}|` for `i >= 1`
    pub steps: Vec<f64>,
    /// `(1-delta)^{j0-i-1} 2^{K-j0+i}` for `i >= 1`
    pub step_limits: Vec<f64>,
    /// `|x_K - z_{j0-1}|`, to be compared with `2^{K-1}`
    pub final_distance: f64,
    pub local_bound: f64,
    /// `c^{-4k/delta} c_tilde 2^{-K(d-1)}`
    pub bound: f64,
}

impl HarnackChain {
    pub fn steps_within_limits(&self) -> bool {
        self.steps.iter().zip(&self.step_limits).all(|(s, l)| *s <= *l + 1e-9)
    }
}

/// Builds the chain for `y` in the boundary of `A_K`. `z_0` is the nearest
/// centre of the widest gap `y` borders and each later `z_i` is the nearest
/// centre of a `(j0-i)`-cylinder; ties go to the lexicographically smallest
/// point.
pub fn harnack_chain_bound(a: &CantorSet, y: &Point, c: f64, c_tilde: f64) -> Result<HarnackChain> {
    if !(c >= 1.0) {
        return Err(invalid("c", "Harnack constant must be at least 1"));
    }
    if !(c_tilde > 0.0) {
        return Err(invalid("c_tilde", "must be positive"));
    }
    let spec = &a.spec;
    let d = spec.d;
    if y.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.dim() });
    }
    let n = spec.n();
    let bordering = a.set.contains(y) && y.neighbors().any(|w| !a.set.contains(&w));
    if !bordering {
        return Err(Error::NotBoundaryPoint(y.to_string()));
    }

    let mut first: Option<(u32, Point)> = None;
    for axis in 0..d {
        for step in [-1, 1] {
            let t = y.coords()[axis] + step;
            if let Some(g) = a.gap_at(t) {
                let z = y.with(axis, g.middle());
                let better = match &first {
                    None => true,
                    Some((j, p)) => (g.depth, y.dist(&z), &z) < (*j, y.dist(p), p),
                };
                if better {
                    first = Some((g.depth, z));
                }
            }
        }
    }
    let (j0, z0) = match first {
        Some(f) => f,
        None => {
            let axis = (0..d)
                .find(|&a| y.coords()[a] == 1 || y.coords()[a] == n)
                .expect("boundary point faces a gap or the outside");
            let out = if y.coords()[axis] == 1 { 0 } else { n + 1 };
            (0, y.with(axis, out))
        }
    };

    let mut points = vec![z0];
    let mut steps = Vec::new();
    let mut step_limits = Vec::new();
    let big_k = spec.big_k as i32;
    for i in 1..j0 {
        let depth = j0 - i;
        let prev = points.last().unwrap().clone();
        let mut best: Option<(f64, Point)> = None;
        for g in a.gaps.iter().filter(|g| g.depth == depth) {
            for axis in 0..d {
                let z = prev.with(axis, g.middle());
                let dz = prev.dist(&z);
                let better = match &best {
                    None => true,
                    Some((bd, bp)) => dz < *bd || (dz == *bd && z < *bp),
                };
                if better {
                    best = Some((dz, z));
                }
            }
        }
        let (dz, z) = best.expect("every depth below j0 has gaps");
        steps.push(dz);
        step_limits.push(
            (1.0 - spec.delta).powi(j0 as i32 - i as i32 - 1) * 2f64.powi(big_k - j0 as i32 + i as i32),
        );
        points.push(z);
    }
    let final_distance = a.centre().dist(points.last().unwrap());
    let local_bound = c_tilde * points[0].dist(y).powi(1 - d as i32);
    let bound = c.powf(-4.0 * spec.k as f64 / spec.delta) * c_tilde * 2f64.powi(-big_k * (d as i32 - 1));
    Ok(HarnackChain { y: y.clone(), j0, points, steps, step_limits, final_distance, local_bound, bound })
}
