use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Cantor parameters aimed at a dimension `target_rho < d`.
#[derive(Clone, Debug, Serialize)]
pub struct CantorPlan {
    pub target_rho: f64,
    pub d: usize,
    pub harnack_c: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CantorPlan {
    /// Deletion depth `floor(gamma K)`, clamped to `0..K`.
    pub fn k(&self, big_k: u32) -> u32 {
        let k = (self.gamma * big_k as f64).floor();
        if k <= 0.0 {
            0
        } else {
            (k as u32).min(big_k.saturating_sub(1))
        }
    }
}

/// `rho = d + 3(d-1) log2(1-delta)`.
pub fn rho_from_delta(delta: f64, d: usize) -> f64 {
    d as f64 + 3.0 * (d as f64 - 1.0) * (1.0 - delta).log2()
}

pub fn plan_cantor(target_rho: f64, d: usize, harnack_c: f64) -> Result<CantorPlan> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let df = d as f64;
    if !(target_rho < df) || !target_rho.is_finite() {
        return Err(invalid("rho", format!("target must be below d = {d}")));
    }
    if !(harnack_c > 1.0) {
        return Err(invalid("c", "Harnack constant must exceed 1"));
    }
    let delta = 1.0 - ((target_rho - df) / (3.0 * (df - 1.0))).exp2();
    let beta = df - 1.0 + 4.0 * harnack_c.ln() / (delta * std::f64::consts::LN_2);
    let keep = (1.0 - delta).ln();
    let gamma = (std::f64::consts::LN_2 + 3.0 * (df - 1.0) * keep) / (std::f64::consts::LN_2 + (df - 1.0) * keep);
    Ok(CantorPlan { target_rho, d, harnack_c, delta, beta, gamma })
}
