use serde::Serialize;

use super::{AuditConfig, TriState};
use crate::dirichlet::OmegaField;
use crate::error::{invalid, Error, Result};
use crate::hausdorff::h_rho_bounds;
use crate::lattice::{LatticeBox, LatticeSet, Point};

/// The cube `Q_*` of side `floor(q side(Q))` placed as close as possible to
/// the centre of `Q`; when the parities differ the lower of the two central
/// positions is used on every axis.
pub fn place_qstar(q_cube: &LatticeBox, q: f64) -> Result<LatticeBox> {
    let side = q_cube.side(0);
    if q_cube.sides().iter().any(|&s| s != side) {
        return Err(invalid("Q", "must be a cube"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", "must lie in (0, 1)"));
    }
    let s = (q * side as f64).floor() as i64;
    if s < 1 {
        return Err(Error::QTooSmall { side: side as u64, q });
    }
    let shift = (side - s) / 2;
    let lo: Vec<i64> = q_cube.lo.coords().iter().map(|c| c + shift).collect();
    Ok(LatticeBox::cube(lo.into(), s))
}

#[derive(Clone, Debug, Serialize)]
pub struct TrappingReport {
    pub q_box: LatticeBox,
    pub q_star: LatticeBox,
    pub h_lower: f64,
    pub h_upper: f64,
    /// `ctilde h / |Q_*|^{rho/d}` with `h` at its lower and upper bracket ends
    pub rhs_lower: f64,
    pub rhs_upper: f64,
    pub min_omega: f64,
    pub argmin: Point,
    /// starts where the inequality fails even against the lower bracket end
    pub violations: Vec<Point>,
    /// starts where it fails only against the upper end
    pub ambiguous: Vec<Point>,
    /// largest `ctilde` certified on this cube, `min omega |Q_*|^{rho/d} / h_upper`
    pub critical_ctilde: f64,
    /// `omega >= delta` on all of `Q_*`
    pub alt_trapping: bool,
    /// `h(A ∩ Q_*) < (delta / ctilde) |Q_*|^{rho/d}`
    pub alt_content: TriState,
    pub dichotomy: TriState,
    pub residual: f64,
}

/// Compares `P^a(tau_A < tau_{Q^c})` on `Q_*` with the content bound
/// `ctilde h_rho(A ∩ Q_*) / |Q_*|^{rho/d}`.
pub fn trapping_check(a: &LatticeSet, q_box: &LatticeBox, config: &AuditConfig) -> Result<TrappingReport> {
    config.validate()?;
    let d = config.d;
    if a.dim() != d || q_box.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.dim().max(q_box.dim()) });
    }
    if config.rho < d as f64 - 1.0 {
        return Err(invalid("rho", format!("trapping bound needs rho >= d - 1 = {}", d - 1)));
    }
    let q_star = place_qstar(q_box, config.q)?;
    let in_q = a.restrict(q_box);
    let in_star = a.restrict(&q_star);
    let scale = (q_star.side(0) as f64).powf(config.rho);
    let (h_lower, h_upper) = if in_star.is_empty() {
        (0.0, 0.0)
    } else {
        let h = h_rho_bounds(&in_star, config.l, config.rho)?;
        (h.lower, h.upper)
    };
    let rhs_lower = config.ctilde * h_lower / scale;
    let rhs_upper = config.ctilde * h_upper / scale;

    let field = if in_q.is_empty() { None } else { Some(OmegaField::new(q_box, &in_q, &in_q)?) };
    let mut min_omega = f64::INFINITY;
    let mut argmin = q_star.lo.clone();
    let mut violations = Vec::new();
    let mut ambiguous = Vec::new();
    for x in q_star.points() {
        let w = field.as_ref().map_or(0.0, |f| f.get(&x));
        if w < min_omega {
            min_omega = w;
            argmin = x.clone();
        }
        if w < rhs_lower {
            violations.push(x);
        } else if w < rhs_upper {
            ambiguous.push(x);
        }
    }
    let critical_ctilde = if h_upper > 0.0 { min_omega * scale / h_upper } else { f64::INFINITY };
    let alt_trapping = min_omega >= config.delta;
    let bar = config.delta / config.ctilde * scale;
    let alt_content = TriState::from_bracket(h_upper < bar, h_lower < bar);
    let dichotomy = if alt_trapping { TriState::Pass } else { alt_content };
    Ok(TrappingReport {
        q_box: q_box.clone(),
        q_star,
        h_lower,
        h_upper,
        rhs_lower,
        rhs_upper,
        min_omega,
        argmin,
        violations,
        ambiguous,
        critical_ctilde,
        alt_trapping,
        alt_content,
        dichotomy,
        residual: field.map_or(0.0, |f| f.residual),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerScale {
    /// side of each of the `2^d` subcubes
    pub m: i64,
    pub min: f64,
    pub argmin: Point,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerEstimate {
    pub d: usize,
    pub q: f64,
    pub scales: Vec<LayerScale>,
    /// running minimum over the scales
    pub c4: f64,
    /// `|min(2m) - min(m)|` between consecutive scales
    pub increments: Vec<f64>,
}

/// Probability of reaching the `2^d` holes `Q_*` before leaving the cube `Q~`
/// made of `2^d` subcubes of side `m`, minimised over starts on the central
/// hyperplanes within distance `m/2 + 1` of the centre. Scales are
/// `m = 8, 16, ...`.
pub fn layer_constants_estimate(config: &AuditConfig, levels: usize) -> Result<LayerEstimate> {
    if levels < 1 {
        return Err(invalid("levels", "need at least one scale"));
    }
    let d = config.d;
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut scales = Vec::with_capacity(levels);
    for i in 0..levels {
        let m = 8i64 << i;
        let outer = LatticeBox::cube(Point::origin(d), 2 * m);
        let mut holes = Vec::new();
        for corner in LatticeBox::cube(Point::origin(d), 2).points() {
            let lo: Vec<i64> = corner.coords().iter().map(|c| c * m).collect();
            holes.extend(place_qstar(&LatticeBox::cube(lo.into(), m), config.q)?.points());
        }
        let holes = LatticeSet::from_points(d, holes)?;
        let field = OmegaField::new(&outer, &holes, &holes)?;
        let reach = (m as f64 / 2.0 + 1.0).powi(2);
        let centre = m as f64 - 0.5;
        let mut best = (f64::INFINITY, Point::origin(d));
        for y in outer.points() {
            if holes.contains(&y) || !y.coords().iter().any(|&c| c == m - 1 || c == m) {
                continue;
            }
            let r2: f64 = y.coords().iter().map(|&c| (c as f64 - centre).powi(2)).sum();
            if r2 > reach {
                continue;
            }
            let w = field.get(&y);
            if w < best.0 {
                best = (w, y);
            }
        }
        scales.push(LayerScale { m, min: best.0, argmin: best.1, residual: field.residual });
    }
    let c4 = scales.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let increments = scales.windows(2).map(|w| (w[1].min - w[0].min).abs()).collect();
    Ok(LayerEstimate { d, q: config.q, scales, c4, increments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qstar_placement() {
        let q = LatticeBox::cube(Point::from([0, 0]), 8);
        let s = place_qstar(&q, 0.5).unwrap();
        assert_eq!(s, LatticeBox::cube(Point::from([2, 2]), 4));
        let s = place_qstar(&q, 0.4).unwrap();
        assert_eq!(s, LatticeBox::cube(Point::from([2, 2]), 3));
        assert!(matches!(place_qstar(&q, 0.1), Err(Error::QTooSmall { side: 8, q: _ })));
    }

    #[test]
    fn odd_parity_placement_is_closest() {
        // brute force over all placements of a side-3 cube in a side-8 cube
        let q = LatticeBox::cube(Point::from([0, 0]), 8);
        let s = place_qstar(&q, 0.4).unwrap();
        let dist = |lo: i64| ((lo as f64 + 1.0) - 3.5).abs();
        let best = (0..=5).map(dist).fold(f64::INFINITY, f64::min);
        assert_eq!(dist(s.lo.coords()[0]), best);
    }

    #[test]
    fn trapping_trivial_cases() {
        let cfg = AuditConfig::default();
        let q = LatticeBox::cube(Point::from([0, 0]), 16);
        let far = LatticeSet::singleton(Point::from([40, 40]));
        let r = trapping_check(&far, &q, &cfg).unwrap();
        assert_eq!(r.min_omega, 0.0);
        assert_eq!(r.rhs_upper, 0.0);
        assert!(r.violations.is_empty() && r.ambiguous.is_empty());

        let full = LatticeSet::from_box(&place_qstar(&q, 0.5).unwrap());
        let r = trapping_check(&full, &q, &cfg).unwrap();
        assert_eq!(r.min_omega, 1.0);
        assert!(r.alt_trapping);
    }

    #[test]
    fn layer_estimate_in_unit_interval() {
        let est = layer_constants_estimate(&AuditConfig::default(), 3).unwrap();
        for s in &est.scales {
            assert!(s.min > 0.0 && s.min < 1.0);
        }
        assert!(est.increments[1] < est.increments[0]);
    }
}
