//! Lattice Green's function (d >= 3) and potential kernel (d = 2).
//!
//! Both come from the Fourier representation over `[-pi, pi]^d` with the
//! characteristic function `phi(theta) = (1/d) sum cos(theta_i)`. The integral
//! over the axis carrying the largest coordinate `m` is done in closed form,
//!
//! ```text
//! ∫ cos(m t) / (b - cos t) dt = 2 pi e^{-m u} / sinh u,   cosh u = b,
//! ```
//!
//! which leaves a 1-D integral for the potential kernel and a 2-D integral with
//! an integrable `1/r` singularity for G in d = 3. The latter is integrated in
//! polar coordinates, where the integrand is smooth. Extra axes for d >= 4 are
//! nested outside the polar block.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::quad::{integrate, integrate_with_breaks, Estimate, Tolerance};

/// `cosh u - 1 = w`; returns `(u, sinh u)` without cancellation for small `w`.
fn acosh1p(w: f64) -> (f64, f64) {
    let s = (w * (2.0 + w)).sqrt();
    ((w + s).ln_1p(), s)
}

/// Potential kernel `a(x)` of the planar walk.
pub fn potential_kernel(x: &Point) -> Result<Estimate> {
    if x.dim() != 2 {
        return Err(Error::KernelDimension(x.dim()));
    }
    let c = x.canonical();
    let (m, n) = (c.coords()[0] as f64, c.coords()[1] as f64);
    if m == 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let f = |t: f64| {
        let half = (0.5 * t).sin();
        let (u, sh) = acosh1p(2.0 * half * half);
        if sh == 0.0 {
            return m;
        }
        let decay = (-m * u).exp();
        let sn = (0.5 * n * t).sin();
        (-(-m * u).exp_m1() + decay * 2.0 * sn * sn) / sh
    };
    let brk = (8.0 / m).min(0.5);
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 20_000 };
    let est = integrate_with_breaks(f, &[0.0, brk, PI], tol);
    Ok(Estimate { value: 2.0 / PI * est.value, error: 2.0 / PI * est.error })
}

/// Lattice Green's function `G(x)`: expected visits to `x` from the origin.
pub fn green(x: &Point) -> Result<Estimate> {
    let d = x.dim();
    if d < 3 {
        return Err(Error::GreenInfinite);
    }
    let c = x.canonical();
    let m = c.coords()[0] as f64;
    let rest: Vec<f64> = c.coords()[1..].iter().map(|&v| v as f64).collect();
    let est = if d == 3 {
        polar_block(m, rest[0], rest[1], 0.0, 1.0, Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 4000 })
    } else {
        nested_block(m, &rest, 0.0, 1.0)
    };
    let pref = d as f64 * PI.powi(1 - d as i32);
    Ok(Estimate { value: pref * est.value, error: pref * est.error })
}

/// ∫∫_{[0,pi]^2} e^{-m u}/sinh u cos(n t2) cos(p t3), with `extra_w` added to
/// `cosh u - 1` from outer axes and `weight` multiplying the integrand.
fn polar_block(m: f64, n: f64, p: f64, extra_w: f64, weight: f64, tol: Tolerance) -> Estimate {
    let inner_tol = Tolerance { abs: tol.abs * 0.1, rel: tol.rel * 0.1, max_intervals: tol.max_intervals };
    let mut inner_err = 0.0f64;
    let outer = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let r_max = PI / c.max(s);
        let f = |r: f64| {
            let t2 = r * c;
            let t3 = r * s;
            let h2 = (0.5 * t2).sin();
            let h3 = (0.5 * t3).sin();
            let w = 2.0 * (h2 * h2 + h3 * h3) + extra_w;
            let (u, sh) = acosh1p(w);
            if sh == 0.0 {
                return weight;
            }
            weight * r * (-m * u).exp() / sh * (n * t2).cos() * (p * t3).cos()
        };
        let brk = (8.0 / (m + 1.0)).min(0.5 * r_max);
        let e = integrate_with_breaks(f, &[0.0, brk, r_max], inner_tol);
        inner_err += e.error;
        e.value
    };
    let mut est = integrate_with_breaks(outer, &[0.0, FRAC_PI_4, FRAC_PI_2], tol);
    // inner errors were accumulated over every outer node; scale to a mean
    est.error += inner_err * FRAC_PI_2 / 45.0;
    est
}

fn nested_block(m: f64, rest: &[f64], extra_w: f64, weight: f64) -> Estimate {
    if rest.len() == 2 {
        return polar_block(m, rest[0], rest[1], extra_w, weight, Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 400 });
    }
    let (q, tail) = rest.split_last().expect("rest has >= 3 entries");
    let mut err = 0.0;
    let e = integrate(
        |t| {
            let h = (0.5 * t).sin();
            let r = nested_block(m, tail, extra_w + 2.0 * h * h, weight * (q * t).cos());
            err += r.error;
            r.value
        },
        0.0,
        PI,
        Tolerance { abs: 1e-11, rel: 1e-8, max_intervals: 200 },
    );
    Estimate { value: e.value, error: e.error }
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    // omega_d = pi^{d/2} / Gamma(d/2 + 1), via the recursion omega_d = 2 pi / d * omega_{d-2}
    let mut w = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 0 } else { 1 };
    while k < d {
        k += 2;
        w *= 2.0 * PI / k as f64;
    }
    w
}

/// `a_d = 2 / ((d - 2) omega_d)`, the leading Green's function coefficient.
pub fn green_leading_coefficient(d: usize) -> f64 {
    2.0 / ((d as f64 - 2.0) * unit_ball_volume(d))
}

/// Numerical value of `lim (a(x) - (2/pi) log |x|)`, Richardson-extrapolated
/// from two far points on the axis (the remainder decays like |x|^{-2}).
pub fn kernel_constant() -> Result<f64> {
    let at = |r: i64| -> Result<f64> {
        Ok(potential_kernel(&Point::from([r, 0]))?.value - 2.0 / PI * (r as f64).ln())
    };
    let k1 = at(512)?;
    let k2 = at(1024)?;
    Ok((4.0 * k2 - k1) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableMode {
    Green,
    PotentialKernel,
}

/// Memoized kernel values keyed by the canonical orbit representative.
pub struct PotentialTable {
    dim: usize,
    mode: TableMode,
    cache: RwLock<HashMap<Point, Estimate>>,
}

impl PotentialTable {
    pub fn new(dim: usize) -> Result<Self> {
        let mode = match dim {
            0 | 1 => return Err(Error::InvalidDimension(dim)),
            2 => TableMode::PotentialKernel,
            _ => TableMode::Green,
        };
        Ok(PotentialTable { dim, mode, cache: RwLock::new(HashMap::new()) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn compute(&self, canon: &Point) -> Result<Estimate> {
        match self.mode {
            TableMode::Green => green(canon),
            TableMode::PotentialKernel => potential_kernel(canon),
        }
    }

    pub fn get(&self, x: &Point) -> Result<f64> {
        Ok(self.estimate(x)?.value)
    }

    pub fn estimate(&self, x: &Point) -> Result<Estimate> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        let canon = x.canonical();
        if let Some(e) = self.cache.read().expect("cache lock").get(&canon) {
            return Ok(*e);
        }
        let e = self.compute(&canon)?;
        self.cache.write().expect("cache lock").insert(canon, e);
        Ok(e)
    }

    /// Fills the cache for all given points, computing missing orbits in parallel.
    pub fn populate<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> Result<()> {
        let mut missing: Vec<Point> = {
            let cache = self.cache.read().expect("cache lock");
            points.into_iter().map(|p| p.canonical()).filter(|c| !cache.contains_key(c)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        let values: Vec<Result<Estimate>> = missing.par_iter().map(|c| self.compute(c)).collect();
        let mut cache = self.cache.write().expect("cache lock");
        for (c, v) in missing.into_iter().zip(values) {
            cache.insert(c, v?);
        }
        Ok(())
    }

    /// Cached entries sorted by canonical point.
    pub fn entries(&self) -> Vec<(Point, Estimate)> {
        let mut v: Vec<_> = self.cache.read().expect("cache lock").iter().map(|(p, e)| (p.clone(), *e)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// CSV dump: coordinates, value, quadrature error estimate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},value,quad_error", header.join(","))?;
        for (p, e) in self.entries() {
            writeln!(w, "{},{:.17e},{:.3e}", p, e.value, e.error)?;
        }
        Ok(())
    }
}

/// Canonical representatives (coordinates non-negative, non-increasing) with
/// `0 < |x| <= radius`.
pub fn canonical_points(dim: usize, radius: i64) -> Vec<Point> {
    fn rec(dim: usize, max: i64, left: i64, prefix: &mut Vec<i64>, out: &mut Vec<Point>) {
        if prefix.len() == dim {
            if prefix.iter().any(|&c| c != 0) {
                out.push(Point::new(prefix));
            }
            return;
        }
        for c in 0..=max {
            if c * c > left {
                break;
            }
            prefix.push(c);
            rec(dim, c, left - c * c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, radius, radius * radius, &mut Vec::new(), &mut out);
    out
}

/// Two-sided bounds `c2 |x|^{2-d} <= G(x) <= c1 |x|^{2-d}` (d >= 3) or
/// `|a(x) - (2/pi) log|x| - k| <= c` (d = 2) on a sampled range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticEnvelope {
    pub dim: usize,
    pub radius: i64,
    /// `a_d` for d >= 3, the constant `k` for d = 2.
    pub leading: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c: Option<f64>,
    pub upper_witness: Point,
    pub lower_witness: Point,
    pub fitted: bool,
}

pub fn fit_envelope(table: &PotentialTable, radius: i64) -> Result<AsymptoticEnvelope> {
    let pts = canonical_points(table.dim(), radius);
    if pts.is_empty() {
        return Err(Error::EmptySet);
    }
    table.populate(&pts)?;
    let d = table.dim();
    match table.mode() {
        TableMode::Green => {
            let mut hi = (f64::NEG_INFINITY, pts[0].clone());
            let mut lo = (f64::INFINITY, pts[0].clone());
            for p in &pts {
                let s = table.get(p)? * p.norm().powi(d as i32 - 2);
                if s > hi.0 {
                    hi = (s, p.clone());
                }
                if s < lo.0 {
                    lo = (s, p.clone());
                }
            }
            Ok(AsymptoticEnvelope {
                dim: d,
                radius,
                leading: green_leading_coefficient(d),
                c1: Some(hi.0),
                c2: Some(lo.0),
                c: None,
                upper_witness: hi.1,
                lower_witness: lo.1,
                fitted: true,
            })
        }
        TableMode::PotentialKernel => {
            let k = kernel_constant()?;
            let mut hi = (f64::NEG_INFINITY, pts[0].clone());
            let mut lo = (f64::INFINITY, pts[0].clone());
            for p in &pts {
                let r = table.get(p)? - 2.0 / PI * p.norm().ln() - k;
                if r > hi.0 {
                    hi = (r, p.clone());
                }
                if r < lo.0 {
                    lo = (r, p.clone());
                }
            }
            Ok(AsymptoticEnvelope {
                dim: d,
                radius,
                leading: k,
                c1: None,
                c2: None,
                c: Some(hi.0.max(-lo.0)),
                upper_witness: hi.1,
                lower_witness: lo.1,
                fitted: true,
            })
        }
    }
}
