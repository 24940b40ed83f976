//! Audits of the cube-tree argument: trapping probabilities, the (H)/(L)
//! dichotomy, the tree with its leaf partition, and the level-set spectrum.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{kernel_hitting, solve_hitting, HittingDistribution, HittingProblem};
use crate::error::{invalid, Error, Result};
use crate::hausdorff::t2;
use crate::lattice::{LatticeSet, Point};

mod chain;
mod partition;
mod spectrum;
mod trap;
mod tree;

pub use chain::{check_chain_bound, estimate_chain_constants, ChainCheck, ChainConstants};
pub use partition::{binomial_pmf, partition_leaves, rate_function, InnerCount, Partition};
pub use spectrum::{spectrum, spectrum_sweep, support_core, SpectrumReport, SupportCore};
pub use trap::{layer_constants_estimate, place_qstar, trapping_check, LayerEstimate, LayerScale, TrappingReport};
pub use tree::{
    build_tree, build_tree_with, classify_cube, inner_fraction, BourgainTree, Classifier, CubeVerdict, Expansion,
    MeasureClassifier, NodeKind, TreeNode,
};

/// Pass, fail, or undecided because a bracket straddles the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Pass,
    Fail,
    Ambiguous,
}

impl TriState {
    pub fn from_bracket(certain: bool, possible: bool) -> TriState {
        match (certain, possible) {
            (true, _) => TriState::Pass,
            (false, true) => TriState::Ambiguous,
            (false, false) => TriState::Fail,
        }
    }
}

/// Constants of an audit run. `delta`, `q`, `c4` and `ctilde` have no
/// closed form; the defaults come from the estimators in this module.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub d: usize,
    pub l: u64,
    pub rho: f64,
    pub delta: f64,
    pub q: f64,
    pub c4: f64,
    pub ctilde: f64,
    /// total-variation tolerance of the exact hitting solves
    pub solver_tolerance: f64,
    /// root level; the smallest admissible one when absent
    pub k_star: Option<u32>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            d: 2,
            l: 12,
            rho: 1.9,
            delta: 0.05,
            q: 0.5,
            c4: DEFAULT_C4,
            ctilde: DEFAULT_CTILDE,
            solver_tolerance: 1e-6,
            k_star: None,
        }
    }
}

/// Running minimum of the layer estimate for `d = 2`, `q = 0.5` up to scale 64, rounded down.
pub const DEFAULT_C4: f64 = 0.83;
/// Smallest trapping constant observed on the Cantor regression, rounded down.
pub const DEFAULT_CTILDE: f64 = 1.4;

/// The two sides of `l^d - 1 + l^{d-rho}(1-q/2)^d + (t2 delta / ctilde) q^rho < l^rho`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Condition11 {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl AuditConfig {
    pub fn for_dim(d: usize) -> Self {
        AuditConfig { d, rho: d as f64 - 0.1, ..AuditConfig::default() }
    }

    /// Checks the ranges of the constants and evaluates the content
    /// condition, which is reported rather than enforced.
    pub fn validate(&self) -> Result<Condition11> {
        if self.d < 2 {
            return Err(Error::InvalidDimension(self.d));
        }
        if self.l < 12 {
            return Err(Error::LayerCountTooSmall(self.l));
        }
        let df = self.d as f64;
        if !(self.rho > 0.0 && self.rho < df) {
            return Err(invalid("rho", format!("{} not in (0, {})", self.rho, self.d)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(invalid("q", "must lie in (0, 1)"));
        }
        if !(self.c4 > 0.0 && self.c4 < 1.0) {
            return Err(invalid("c4", "must lie in (0, 1)"));
        }
        if !(self.ctilde > 0.0) {
            return Err(invalid("ctilde", "must be positive"));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(invalid("solver_tolerance", "must be positive"));
        }
        Ok(condition_11(self.d, self.l, self.rho, self.delta, self.q, self.ctilde))
    }

    /// `(1 - c4 delta)^{lbar-1} / (c4 delta)`.
    pub fn decay_factor(&self) -> f64 {
        let lbar = crate::lattice::layer_count(self.l) as i32;
        let e = self.c4 * self.delta;
        (1.0 - e).powi(lbar - 1) / e
    }
}

pub fn condition_11(d: usize, l: u64, rho: f64, delta: f64, q: f64, ctilde: f64) -> Condition11 {
    let (lf, df) = (l as f64, d as f64);
    let lhs = lf.powf(df) - 1.0 + lf.powf(df - rho) * (1.0 - q / 2.0).powf(df) + t2(d, l, rho) * delta / ctilde * q.powf(rho);
    let rhs = lf.powf(rho);
    Condition11 { lhs, rhs, holds: lhs < rhs }
}

/// `d - b / (l^d log l)` with `b = 1 - [(1-q/2)^d + 8^d delta q^d / ctilde]`;
/// `None` when `b <= 0`, in which case no `rho` close to `d` satisfies the
/// content condition.
pub fn suggest_rho(d: usize, l: u64, delta: f64, q: f64, ctilde: f64) -> Option<f64> {
    let df = d as f64;
    let b = 1.0 - ((1.0 - q / 2.0).powf(df) + 8f64.powf(df) * delta * q.powf(df) / ctilde);
    (b > 0.0).then(|| df - b / ((l as f64).powf(df) * (l as f64).ln()))
}

/// Boundary size up to which the dense kernel route is used.
pub const KERNEL_MAX_BOUNDARY: usize = 2500;

/// First-entrance law of `a` from `x`, by kernel algebra on small
/// boundaries and guard-box solves otherwise.
pub fn exact_measure(a: &LatticeSet, x: &Point, tolerance: f64) -> Result<HittingDistribution> {
    if a.boundary()?.len() <= KERNEL_MAX_BOUNDARY {
        kernel_hitting(a, x)
    } else {
        solve_hitting(&HittingProblem::new(a.clone(), x.clone())?.with_tolerance(tolerance)?)
    }
}
