use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::exact_measure;
use crate::dirichlet::harnack_ratio;
use crate::error::Result;
use crate::forge::{harnack_chain_bound, CantorSet};
use crate::lattice::Point;

/// Constants making the chain bound hold on one Cantor set.
#[derive(Clone, Debug, Serialize)]
pub struct ChainConstants {
    /// `min_y nu_{A, z_0}(y) |z_0 - y|^{d-1}`
    pub c_tilde: f64,
    pub c_tilde_at: Point,
    /// Harnack ratio of the half ball at radius `2^{K-1}`
    pub c: f64,
    /// smallest `c >= 1` with `nu_{A, x_K}(y) >= c^{-4k/delta} c_tilde 2^{-K(d-1)}` for all `y`
    pub c_tight: f64,
    pub min_nu: f64,
    pub min_nu_at: Point,
    pub boundary_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainCheck {
    pub big_k: u32,
    pub bound: f64,
    pub min_nu: f64,
    pub min_nu_at: Point,
    pub violations: Vec<Point>,
    pub boundary_points: usize,
}

pub fn estimate_chain_constants(a: &CantorSet, tolerance: f64) -> Result<ChainConstants> {
    let d = a.spec.d;
    let boundary = a.set.boundary()?;
    let mut groups: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    for y in boundary.iter() {
        let ch = harnack_chain_bound(a, y, 2.0, 1.0)?;
        groups.entry(ch.points[0].clone()).or_default().push(y.clone());
    }
    let groups: Vec<(Point, Vec<Point>)> = groups.into_iter().collect();
    let local: Vec<(f64, Point)> = groups
        .par_iter()
        .map(|(z0, ys)| -> Result<(f64, Point)> {
            let nu = exact_measure(&a.set, z0, tolerance)?;
            let mut best = (f64::INFINITY, ys[0].clone());
            for y in ys {
                let v = nu.get(y) * z0.dist(y).powi(d as i32 - 1);
                if v < best.0 {
                    best = (v, y.clone());
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (c_tilde, c_tilde_at) =
        local.into_iter().fold((f64::INFINITY, Point::origin(d)), |acc, b| if b.0 < acc.0 { b } else { acc });
    let (min_nu, min_nu_at) = centre_minimum(a, tolerance)?;
    let spec = &a.spec;
    let base = c_tilde * 2f64.powi(-(spec.big_k as i32) * (d as i32 - 1));
    let c_tight = if spec.k == 0 { 1.0 } else { (base / min_nu).powf(spec.delta / (4.0 * spec.k as f64)).max(1.0) };
    let c = harnack_ratio(d, (a.spec.n() / 2).max(2))?;
    Ok(ChainConstants { c_tilde, c_tilde_at, c, c_tight, min_nu, min_nu_at, boundary_points: boundary.len() })
}

fn centre_minimum(a: &CantorSet, tolerance: f64) -> Result<(f64, Point)> {
    let nu = exact_measure(&a.set, &a.centre(), tolerance)?;
    let mut best = (f64::INFINITY, a.centre());
    for y in a.set.boundary()?.iter() {
        let v = nu.get(y);
        if v < best.0 {
            best = (v, y.clone());
        }
    }
    Ok(best)
}

/// Exact `nu_{A_K, x_K}` against the chain bound on every boundary point.
pub fn check_chain_bound(a: &CantorSet, c: f64, c_tilde: f64, tolerance: f64) -> Result<ChainCheck> {
    let nu = exact_measure(&a.set, &a.centre(), tolerance)?;
    let boundary = a.set.boundary()?;
    let mut bound = 0.0;
    let mut violations = Vec::new();
    let mut best = (f64::INFINITY, a.centre());
    for y in boundary.iter() {
        let ch = harnack_chain_bound(a, y, c, c_tilde)?;
        bound = ch.bound;
        let v = nu.get(y);
        if v < ch.bound {
            violations.push(y.clone());
        }
        if v < best.0 {
            best = (v, y.clone());
        }
    }
    Ok(ChainCheck {
        big_k: a.spec.big_k,
        bound,
        min_nu: best.0,
        min_nu_at: best.1,
        violations,
        boundary_points: boundary.len(),
    })
}
