use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::RunManifest;
use crate::audit::TriState;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: Option<String>,
    pub kind: String,
    pub config_hash: String,
    pub wall_seconds: f64,
    pub pass: usize,
    pub fail: usize,
    pub ambiguous: usize,
    pub warnings: usize,
}

/// Least-squares line through `(ln n, ln count)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub label: String,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// slope plus or minus two standard errors
    pub band: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub d: Option<usize>,
    pub runs: Vec<RunSummary>,
    pub totals: BTreeMap<String, usize>,
    pub fits: Vec<SlopeFit>,
}

/// Fits `ln y = a + b ln x` over the points with positive coordinates.
/// Returns `None` with fewer than two usable points or a degenerate abscissa.
pub fn fit_loglog(label: &str, points: &[(f64, f64)]) -> Option<SlopeFit> {
    let xy: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = xy.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if m > 2 {
        let rss: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit {
        label: label.to_string(),
        points: m,
        slope,
        intercept,
        stderr,
        band: (slope - 2.0 * stderr, slope + 2.0 * stderr),
    })
}

fn series(m: &RunManifest) -> Vec<(String, Vec<(f64, f64)>)> {
    let Some(list) = m.summary.get("series").and_then(|s| s.as_array()) else {
        return Vec::new();
    };
    list.iter()
        .filter_map(|s| {
            let label = s.get("label")?.as_str()?.to_string();
            let pts = s
                .get("points")?
                .as_array()?
                .iter()
                .filter_map(|p| Some((p.get(0)?.as_f64()?, p.get(1)?.as_f64()?)))
                .collect();
            Some((label, pts))
        })
        .collect()
}

/// Aggregates manifests. All runs that record a dimension must agree on it.
pub fn report(manifests: &[RunManifest]) -> Result<Report> {
    let mut d = None;
    for m in manifests {
        if let Some(md) = m.d {
            match d {
                None => d = Some(md),
                Some(prev) if prev != md => return Err(Error::DimensionMismatch { expected: prev, got: md }),
                _ => {}
            }
        }
    }
    let mut totals = BTreeMap::new();
    let mut runs = Vec::new();
    let mut fits = Vec::new();
    for m in manifests {
        let count = |s: TriState| m.checks.iter().filter(|c| c.status == s).count();
        let r = RunSummary {
            name: m.name.clone(),
            kind: m.kind.clone(),
            config_hash: m.config_hash.clone(),
            wall_seconds: m.wall_seconds,
            pass: count(TriState::Pass),
            fail: count(TriState::Fail),
            ambiguous: count(TriState::Ambiguous),
            warnings: m.warnings.len(),
        };
        *totals.entry("pass".to_string()).or_insert(0) += r.pass;
        *totals.entry("fail".to_string()).or_insert(0) += r.fail;
        *totals.entry("ambiguous".to_string()).or_insert(0) += r.ambiguous;
        runs.push(r);
        let tag = m.name.clone().unwrap_or_else(|| m.kind.clone());
        for (label, pts) in series(m) {
            fits.extend(fit_loglog(&format!("{tag}: {label}"), &pts));
        }
    }
    Ok(Report { d, runs, totals, fits })
}

impl Report {
    pub fn failed(&self) -> bool {
        self.totals.get("fail").copied().unwrap_or(0) > 0
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# harmlab report\n");
        if let Some(d) = self.d {
            let _ = writeln!(s, "Dimension: {d}\n");
        }
        let _ = writeln!(s, "| run | kind | config | pass | fail | ambiguous | warnings | seconds |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {:.2} |",
                r.name.as_deref().unwrap_or("-"),
                r.kind,
                &r.config_hash[..r.config_hash.len().min(12)],
                r.pass,
                r.fail,
                r.ambiguous,
                r.warnings,
                r.wall_seconds
            );
        }
        if !self.fits.is_empty() {
            let _ = writeln!(s, "\n## Log-log slopes\n");
            let _ = writeln!(s, "| series | points | slope | stderr | band |");
            let _ = writeln!(s, "|---|---|---|---|---|");
            for f in &self.fits {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.4} | {:.4} | [{:.4}, {:.4}] |",
                    f.label, f.points, f.slope, f.stderr, f.band.0, f.band.1
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0, 32.0].iter().map(|&n| (n, 3.0 * n.powf(1.5))).collect();
        let f = fit_loglog("x", &pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn degenerate_fits() {
        assert!(fit_loglog("x", &[(2.0, 1.0)]).is_none());
        assert!(fit_loglog("x", &[(2.0, 1.0), (2.0, 3.0)]).is_none());
        assert!(fit_loglog("x", &[(2.0, 0.0), (4.0, 3.0)]).is_none());
    }
}
