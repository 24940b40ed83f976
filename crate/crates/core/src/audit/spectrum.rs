use serde::Serialize;

use crate::dirichlet::{HittingDistribution, Method};
use crate::error::{invalid, Result};
use crate::lattice::{LatticeSet, Point};

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub n: i64,
    pub beta: f64,
    /// `n^{-beta}`
    pub threshold: f64,
    /// `|{y : nu(y) >= n^{-beta}}|`
    pub count: usize,
    /// `log(count) / log(n)`, `-inf` for an empty level set
    pub rho_hat: f64,
    pub method: Method,
    /// points whose interval lies entirely at or above the threshold
    pub count_lo: usize,
    /// points whose interval reaches the threshold
    pub count_hi: usize,
}

impl SpectrumReport {
    pub fn ambiguous(&self) -> usize {
        self.count_hi - self.count_lo
    }
}

/// Level-set count of a first-entrance law. For Monte Carlo laws the
/// confidence intervals give a bracket `count_lo..=count_hi`.
pub fn spectrum(nu: &HittingDistribution, n: i64, beta: f64) -> Result<SpectrumReport> {
    if n < 2 {
        return Err(invalid("n", "cube side must be at least 2"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let threshold = (n as f64).powf(-beta);
    let count = nu.iter().filter(|&(_, v)| v >= threshold).count();
    let (count_lo, count_hi) = match &nu.ci {
        Some(ci) => (
            ci.values().filter(|iv| iv.lo >= threshold).count(),
            ci.values().filter(|iv| iv.hi >= threshold).count(),
        ),
        None => (count, count),
    };
    let rho_hat = if count == 0 { f64::NEG_INFINITY } else { (count as f64).ln() / (n as f64).ln() };
    Ok(SpectrumReport { n, beta, threshold, count, rho_hat, method: nu.method, count_lo, count_hi })
}

pub fn spectrum_sweep(nu: &HittingDistribution, n: i64, betas: &[f64]) -> Result<Vec<SpectrumReport>> {
    betas.iter().map(|&b| spectrum(nu, n, b)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportCore {
    /// chosen points, heaviest first
    pub points: Vec<Point>,
    pub mass: f64,
    pub total: f64,
    pub epsilon: f64,
    pub warning: Option<String>,
}

impl SupportCore {
    pub fn set(&self, dim: usize) -> LatticeSet {
        LatticeSet::from_points(dim, self.points.iter().cloned()).expect("points share the dimension")
    }
}

/// Fewest points carrying at least `total - epsilon` of the hit mass: the
/// heaviest prefix in descending density, ties in lexicographic order. A
/// relative slack of `1e-12` absorbs summation rounding.
pub fn support_core(nu: &HittingDistribution, epsilon: f64) -> Result<SupportCore> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let total = nu.hit_mass();
    if epsilon >= total {
        return Ok(SupportCore {
            points: Vec::new(),
            mass: 0.0,
            total,
            epsilon,
            warning: Some(format!("epsilon {epsilon} is at least the hit mass {total}; the empty set suffices")),
        });
    }
    let mut pts: Vec<(&Point, f64)> = nu.iter().filter(|&(_, v)| v > 0.0).collect();
    pts.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let goal = total - epsilon - 1e-12 * total;
    let mut mass = 0.0;
    let mut points = Vec::new();
    for (p, v) in pts {
        if mass >= goal {
            break;
        }
        mass += v;
        points.push(p.clone());
    }
    Ok(SupportCore { points, mass, total, epsilon, warning: None })
}
