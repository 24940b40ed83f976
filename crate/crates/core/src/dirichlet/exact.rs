//! Guard-box solves with a far-field correction and the box-doubling loop.
//!
//! A walk killed on the guard box only sees a truncated picture: in d = 2 the
//! lost mass decays like 1/log L and in d >= 3 the missing returns decay like
//! 1/L. Each box therefore adds back the walks that leave the box and come
//! back, using the escape distribution computed on the same box:
//!
//! * d = 2: every walk returns, and from far away it lands according to the
//!   normalized escape distribution of the target.
//! * d >= 3: a walk at a far point w returns with probability close to
//!   `G(w - c) cap(A)`, landing according to the equilibrium measure; both
//!   are recovered from one extra solve against the Green's asymptote.

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeBox, LatticeSet, Point};
use crate::potential::green_leading_coefficient;

use super::grid::{Grid, EXIT, FREE};
use super::{HittingDistribution, HittingProblem, Method, SOLVER_TOL};

struct BoxSolve {
    /// target points with their truncated density
    nu: Vec<(Point, f64)>,
    exit: f64,
    residual: f64,
}

/// `(1/2d) sum` over the neighbours of `i`, reading `field` on free cells,
/// `outside(j)` on exit cells and zero on absorbing cells.
fn push(grid: &Grid, field: &[f64], i: usize, outside: impl Fn(usize) -> f64) -> f64 {
    let inv = 1.0 / (2 * grid.dim()) as f64;
    inv * grid
        .neighbors(i)
        .map(|j| match grid.state_at(j) {
            FREE => field[j],
            EXIT => outside(j),
            _ => 0.0,
        })
        .sum::<f64>()
}

fn box_solve(target: &LatticeSet, x: &Point, guard: &LatticeBox) -> Result<BoxSolve> {
    if !guard.contains(x) {
        return Err(Error::StartOutsideGuard(x.to_string()));
    }
    if let Some(bb) = target.bbox() {
        if !guard.contains_box(bb) {
            return Err(invalid("guard", "must contain the target"));
        }
    }
    let grid = Grid::with_set(guard, target);
    let xi = grid.index(x).expect("start inside guard");
    let (occ, rep) = grid.occupation(&[(xi, 1.0)], SOLVER_TOL)?;
    let nu = target
        .iter()
        .map(|y| {
            let i = grid.index(y).expect("target inside guard");
            (y.clone(), push(&grid, &occ, i, |_| 0.0))
        })
        .collect();
    let inv = 1.0 / (2 * grid.dim()) as f64;
    let mut exit = 0.0;
    for i in 0..grid.len() {
        if grid.state_at(i) == FREE {
            let n = grid.neighbors(i).filter(|&j| grid.state_at(j) == EXIT).count();
            exit += occ[i] * n as f64 * inv;
        }
    }
    Ok(BoxSolve { nu, exit, residual: rep.residual })
}

/// Exact first-entrance distribution for the walk killed on leaving `guard`.
///
/// The escaped mass is the probability of leaving the box before entering the
/// target; the density is a lower bound for the infinite-lattice density and
/// increases with the box.
pub fn solve_truncated(target: &LatticeSet, x: &Point, guard: &LatticeBox) -> Result<HittingDistribution> {
    if target.is_empty() {
        return Err(Error::EmptySet);
    }
    if target.contains(x) {
        let mut d = HittingDistribution::point_mass(x.clone(), Method::Exact);
        d.guard_used = Some(guard.clone());
        return Ok(d);
    }
    let bs = box_solve(target, x, guard)?;
    let mut d = HittingDistribution::new(x.clone(), Method::Exact);
    for (y, v) in bs.nu {
        if v > 0.0 {
            d.density.insert(y, v);
        }
    }
    d.escaped_mass = bs.exit;
    d.truncated_escape = Some(bs.exit);
    d.guard_used = Some(guard.clone());
    d.residual = bs.residual;
    Ok(d)
}

/// Start-independent part of the far-field correction on one guard box.
pub(crate) struct FarField {
    pub(crate) grid: Grid,
    targets: Vec<(Point, usize)>,
    esc_total: f64,
    /// `P^z(leave the box before entering A)` on free cells
    exit_field: Vec<f64>,
    /// d >= 3: boundary source of the Green's asymptote and the solve against it
    source: Option<(Vec<f64>, Vec<f64>)>,
    /// landing law of returning walks (unnormalized in d >= 3)
    landing: Vec<f64>,
    cap: f64,
    residual: f64,
}

impl FarField {
    pub(crate) fn new(target: &LatticeSet, guard: &LatticeBox) -> Result<FarField> {
        if let Some(bb) = target.bbox() {
            if !guard.contains_box(bb) {
                return Err(invalid("guard", "must contain the target"));
            }
        }
        let grid = Grid::with_set(guard, target);
        let dim = grid.dim();
        let inv = 1.0 / (2 * dim) as f64;
        let targets: Vec<(Point, usize)> =
            target.iter().map(|y| (y.clone(), grid.index(y).expect("target inside guard"))).collect();

        let mut rhs = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            if grid.state_at(i) == FREE {
                rhs[i] = inv * grid.neighbors(i).filter(|&j| grid.state_at(j) == EXIT).count() as f64;
            }
        }
        let (exit_field, rep) = grid.solve(&rhs, SOLVER_TOL)?;
        let esc: Vec<f64> = targets.iter().map(|&(_, i)| push(&grid, &exit_field, i, |_| 1.0)).collect();
        let esc_total: f64 = esc.iter().sum();
        let mut residual = rep.residual;

        let mut source = None;
        let mut landing = esc.clone();
        let mut cap = esc_total;
        if dim > 2 && esc_total > 0.0 {
            // centring on the escape-weighted mean removes the dipole term of
            // the far field
            let centre: Vec<f64> = (0..dim)
                .map(|a| targets.iter().zip(&esc).map(|((y, _), e)| e * y.coords()[a] as f64).sum::<f64>() / esc_total)
                .collect();
            let ad = green_leading_coefficient(dim);
            let far = |j: usize| {
                let p = grid.point(j);
                let r2: f64 = p.coords().iter().zip(&centre).map(|(&c, m)| (c as f64 - m).powi(2)).sum();
                ad * r2.sqrt().powi(2 - dim as i32)
            };
            let mut bg = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                if grid.state_at(i) == FREE {
                    bg[i] = inv * grid.neighbors(i).filter(|&j| grid.state_at(j) == EXIT).map(far).sum::<f64>();
                }
            }
            let (u, rep_u) = grid.solve(&bg, SOLVER_TOL)?;
            residual = residual.max(rep_u.residual);
            let m: Vec<f64> = targets.iter().map(|&(_, i)| push(&grid, &u, i, far)).collect();
            cap = esc_total / (1.0 + m.iter().sum::<f64>());
            landing = esc.iter().zip(&m).map(|(e, mm)| (e - mm * cap).max(0.0)).collect();
            source = Some((bg, u));
        } else if esc_total > 0.0 {
            landing = esc.iter().map(|e| e / esc_total).collect();
        }
        Ok(FarField { grid, targets, esc_total, exit_field, source, landing, cap, residual })
    }

    /// `P^z(tau_A < infinity)` for a free cell `i`; 1 in d = 2.
    pub(crate) fn hit_probability(&self, i: usize) -> f64 {
        match &self.source {
            None if self.grid.dim() == 2 => 1.0,
            None => 1.0 - self.exit_field[i],
            Some((_, u)) => 1.0 - self.exit_field[i] + u[i] * self.cap,
        }
    }

    /// Entrance law from the weighted start mixture `starts` (free cells).
    pub(crate) fn distribution(&self, starts: &[(usize, f64)], start: Point) -> Result<HittingDistribution> {
        let grid = &self.grid;
        let inv = 1.0 / (2 * grid.dim()) as f64;
        let (occ, rep) = grid.occupation(starts, SOLVER_TOL)?;
        let mut exit = 0.0;
        for i in 0..grid.len() {
            if grid.state_at(i) == FREE {
                let n = grid.neighbors(i).filter(|&j| grid.state_at(j) == EXIT).count();
                exit += occ[i] * n as f64 * inv;
            }
        }
        let weight: f64 = starts.iter().map(|s| s.1).sum();
        let mut d = HittingDistribution::new(start, Method::Exact);
        d.guard_used = Some(grid.bounds().clone());
        d.truncated_escape = Some(exit);
        d.residual = self.residual.max(rep.residual);
        let returning = match &self.source {
            _ if self.esc_total <= 0.0 => 0.0,
            None if grid.dim() == 2 => exit,
            None => 0.0,
            Some((bg, _)) => occ.iter().zip(bg).map(|(o, b)| o * b).sum(),
        };
        for (k, (y, i)) in self.targets.iter().enumerate() {
            let val = push(grid, &occ, *i, |_| 0.0) + returning * self.landing[k];
            if val > 0.0 {
                d.density.insert(y.clone(), val);
            }
        }
        d.escaped_mass = if grid.dim() == 2 && self.esc_total > 0.0 {
            0.0
        } else {
            (weight - d.hit_mass()).max(0.0)
        };
        Ok(d)
    }
}

fn closed_solve(target: &LatticeSet, x: &Point, guard: &LatticeBox) -> Result<HittingDistribution> {
    if !guard.contains(x) {
        return Err(Error::StartOutsideGuard(x.to_string()));
    }
    let ff = FarField::new(target, guard)?;
    let xi = ff.grid.index(x).expect("start inside guard");
    ff.distribution(&[(xi, 1.0)], x.clone())
}

/// Total variation between two sub-probability laws, escape counted as an atom.
pub(crate) fn tv_with_escape(a: &HittingDistribution, b: &HittingDistribution) -> f64 {
    let mut s = (a.escaped_mass - b.escaped_mass).abs();
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

/// First-entrance distribution on the infinite lattice.
///
/// Solves on guard boxes of doubling size, each with the far-field correction,
/// until the total-variation change falls below `problem.tolerance`. In d = 2
/// the escaped mass of the result is zero; the raw box loss is kept in
/// `truncated_escape`. In d >= 3 the escaped mass is `P^x(never enter A)`.
pub fn solve_hitting(problem: &HittingProblem) -> Result<HittingDistribution> {
    let x = &problem.start;
    if problem.target.contains(x) {
        let mut d = HittingDistribution::point_mass(x.clone(), Method::Exact);
        d.guard_used = Some(problem.initial_guard());
        return Ok(d);
    }
    let mut guard = problem.initial_guard();
    let mut prev = closed_solve(&problem.target, x, &guard)?;
    let mut trace = Vec::new();
    let mut prev_ext: Option<HittingDistribution> = None;
    for k in 0..problem.max_doublings {
        guard = double(&guard);
        if guard.volume() > problem.max_cells {
            return Err(Error::NoConvergence { doublings: k, trace });
        }
        let mut next = closed_solve(&problem.target, x, &guard)?;
        let tv = tv_with_escape(&prev, &next);
        trace.push(tv);
        if tv < problem.tolerance {
            next.trace = trace;
            return Ok(next);
        }
        let mut ext = extrapolate(&prev, &next, 1.0 / ((1u64 << problem.dim()) - 1) as f64);
        if let Some(pe) = &prev_ext {
            if tv_with_escape(pe, &ext) < problem.tolerance {
                ext.trace = trace;
                return Ok(ext);
            }
        }
        prev_ext = Some(ext);
        prev = next;
    }
    Err(Error::NoConvergence { doublings: problem.max_doublings, trace })
}

/// `next + f (next - prev)` pointwise, escape included. The closed box solves
/// approach the limit like `L^{-d}`, so errors shrink by `r = 2^{-d}` per
/// doubling and `f = r / (1 - r) = 1 / (2^d - 1)` removes the leading term.
fn extrapolate(prev: &HittingDistribution, next: &HittingDistribution, f: f64) -> HittingDistribution {
    let mut out = next.clone();
    out.method = Method::Extrapolated;
    for (y, v) in out.density.iter_mut() {
        *v = (*v + f * (*v - prev.get(y))).max(0.0);
    }
    out.escaped_mass = (next.escaped_mass + f * (next.escaped_mass - prev.escaped_mass)).max(0.0);
    out
}

/// Box with the same centre and twice the side.
fn double(bx: &LatticeBox) -> LatticeBox {
    let lo: Vec<i64> = (0..bx.dim()).map(|a| bx.lo.coords()[a] - (bx.side(a) + 1) / 2).collect();
    let hi: Vec<i64> = (0..bx.dim()).map(|a| bx.hi.coords()[a] + (bx.side(a) + 1) / 2).collect();
    LatticeBox::new(lo.into(), hi.into()).expect("ordered corners")
}
