//! Experiment orchestration: JSON configs, run manifests and reports.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::AuditConfig;
use crate::error::{Error, Result};
use crate::forge::{cantor_set, family, CantorSpec, FamilyParams};
use crate::lattice::{io, LatticeSet, Point};

mod report;
mod run;

pub use report::{fit_loglog, report, Report, RunSummary, SlopeFit};
pub use run::{run, start_point, Check, RunManifest, RunOutcome, Stage};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub experiment: Experiment,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Solve(SolveSpec),
    Mc(McSpec),
    SpectrumSweep(SweepSpec),
    CantorAudit(CantorAuditSpec),
    TreeAudit(TreeAuditSpec),
    ConstantsEstimate(ConstantsSpec),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve(_) => "solve",
            Experiment::Mc(_) => "mc",
            Experiment::SpectrumSweep(_) => "spectrum-sweep",
            Experiment::CantorAudit(_) => "cantor-audit",
            Experiment::TreeAudit(_) => "tree-audit",
            Experiment::ConstantsEstimate(_) => "constants-estimate",
        }
    }
}

/// Where a target set comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSource {
    Points(Vec<Point>),
    File(PathBuf),
    Cantor(CantorSpec),
    Family { name: String, params: FamilyParams },
}

impl SetSource {
    pub fn load(&self, base: &Path) -> Result<LatticeSet> {
        match self {
            SetSource::Points(p) => {
                let d = p.first().ok_or(Error::EmptySet)?.dim();
                LatticeSet::from_points(d, p.iter().cloned())
            }
            SetSource::File(f) => io::load(base.join(f)),
            SetSource::Cantor(spec) => {
                CantorSpec::new(spec.big_k, spec.delta, spec.k, spec.d)?;
                Ok(cantor_set(spec)?.set)
            }
            SetSource::Family { name, params } => family(name, params),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    #[default]
    Exact,
    Kernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub set: SetSource,
    /// defaults to the centre of the bounding box
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub set: SetSource,
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default = "default_walks")]
    pub walks: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_walks() -> u64 {
    100_000
}

fn default_max_steps() -> u64 {
    1_000_000
}

/// Cantor products over a range of `K` with `k = k` or `floor(k_fraction K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_d")]
    pub d: usize,
    pub delta: f64,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default = "default_k_fraction")]
    pub k_fraction: f64,
    pub big_k: [u32; 2],
    pub betas: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_d() -> usize {
    2
}

fn default_k_fraction() -> f64 {
    0.5
}

impl SweepSpec {
    pub fn k_for(&self, big_k: u32) -> u32 {
        self.k.unwrap_or((self.k_fraction * big_k as f64).floor() as u32)
    }
}

/// Chain-bound check over a range of `K`, with constants estimated at the
/// first `K` unless given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorAuditSpec {
    #[serde(default = "default_d")]
    pub d: usize,
    pub delta: f64,
    pub k: u32,
    pub big_k: [u32; 2],
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub c_tilde: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeAuditSpec {
    pub set: SetSource,
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// set placed in a cube of side `trapping_side` for the trapping check
    #[serde(default)]
    pub trapping_set: Option<SetSource>,
    #[serde(default = "default_trapping_side")]
    pub trapping_side: i64,
}

fn default_levels() -> usize {
    3
}

fn default_trapping_side() -> i64 {
    64
}

fn bad(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

fn check_unit(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(bad(path, format!("{v} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(bad(path, format!("{v} must be positive")));
    }
    Ok(())
}

fn check_range(path: &str, r: [u32; 2]) -> Result<()> {
    if r[0] < 1 || r[0] > r[1] || r[1] > 30 {
        return Err(bad(path, format!("{r:?} must be an increasing range within 1..=30")));
    }
    Ok(())
}

fn check_source(path: &str, s: &SetSource) -> Result<()> {
    match s {
        SetSource::Points(p) if p.is_empty() => Err(bad(path, "no points")),
        SetSource::Cantor(c) => {
            check_unit(&format!("{path}.delta"), c.delta)?;
            CantorSpec::new(c.big_k, c.delta, c.k, c.d).map_err(|e| bad(path, e.to_string())).map(|_| ())
        }
        _ => Ok(()),
    }
}

fn check_audit(path: &str, a: &AuditConfig) -> Result<()> {
    a.validate().map(|_| ()).map_err(|e| bad(path, e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output")]
    output_dir: PathBuf,
    experiment: serde_json::Value,
}

fn at<'de, T: serde::de::DeserializeOwned, D: serde::Deserializer<'de>>(prefix: &str, de: D) -> Result<T> {
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            (p, ".") => p.trim_end_matches('.').to_string(),
            (p, i) => format!("{p}{i}"),
        };
        Error::Config { path, message: e.into_inner().to_string() }
    })
}

impl ExperimentConfig {
    /// Parses JSON, reporting the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut raw: RawConfig = at("", &mut serde_json::Deserializer::from_str(text))?;
        let kind = match raw.experiment.as_object_mut().and_then(|o| o.remove("kind")) {
            Some(serde_json::Value::String(k)) => k,
            _ => return Err(bad("experiment.kind", "missing or not a string")),
        };
        let v = raw.experiment;
        let p = "experiment.";
        let experiment = match kind.as_str() {
            "solve" => Experiment::Solve(at(p, v)?),
            "mc" => Experiment::Mc(at(p, v)?),
            "spectrum-sweep" => Experiment::SpectrumSweep(at(p, v)?),
            "cantor-audit" => Experiment::CantorAudit(at(p, v)?),
            "tree-audit" => Experiment::TreeAudit(at(p, v)?),
            "constants-estimate" => Experiment::ConstantsEstimate(at(p, v)?),
            other => return Err(bad("experiment.kind", format!("unknown kind `{other}`"))),
        };
        let cfg = ExperimentConfig { name: raw.name, seed: raw.seed, output_dir: raw.output_dir, experiment };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Range checks beyond the JSON schema.
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::Solve(s) => {
                check_source("experiment.set", &s.set)?;
                check_positive("experiment.tolerance", s.tolerance)
            }
            Experiment::Mc(m) => {
                check_source("experiment.set", &m.set)?;
                if m.walks == 0 {
                    return Err(bad("experiment.walks", "must be positive"));
                }
                Ok(())
            }
            Experiment::SpectrumSweep(s) => {
                check_unit("experiment.delta", s.delta)?;
                check_range("experiment.big_k", s.big_k)?;
                if s.betas.is_empty() {
                    return Err(bad("experiment.betas", "need at least one beta"));
                }
                for (i, b) in s.betas.iter().enumerate() {
                    check_positive(&format!("experiment.betas[{i}]"), *b)?;
                }
                check_positive("experiment.tolerance", s.tolerance)
            }
            Experiment::CantorAudit(c) => {
                check_unit("experiment.delta", c.delta)?;
                check_range("experiment.big_k", c.big_k)?;
                if let Some(v) = c.c {
                    if !(v >= 1.0) {
                        return Err(bad("experiment.c", "must be at least 1"));
                    }
                }
                if let Some(v) = c.c_tilde {
                    check_positive("experiment.c_tilde", v)?;
                }
                check_positive("experiment.tolerance", c.tolerance)
            }
            Experiment::TreeAudit(t) => {
                check_source("experiment.set", &t.set)?;
                check_audit("experiment.audit", &t.audit)
            }
            Experiment::ConstantsEstimate(c) => {
                check_audit("experiment.audit", &c.audit)?;
                if c.levels == 0 {
                    return Err(bad("experiment.levels", "must be positive"));
                }
                if let Some(s) = &c.trapping_set {
                    check_source("experiment.trapping_set", s)?;
                }
                Ok(())
            }
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Per-stage seed: the first 8 bytes of `SHA-256(master || stage)`.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

/// Sizes the global thread pool from `HARMLAB_THREADS` when set.
pub fn init_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var("HARMLAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().map_err(|_| bad("HARMLAB_THREADS", format!("`{v}` is not a thread count")))?;
    if n == 0 {
        return Err(bad("HARMLAB_THREADS", "must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| bad("HARMLAB_THREADS", e.to_string()))?;
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"{"seed": 3, "experiment": {"kind": "solve", "set": {"points": [[-1, 0], [1, 0]]}, "start": [0, 5]}}"#;

    #[test]
    fn parses_and_hashes() {
        let c = ExperimentConfig::from_json(SOLVE).unwrap();
        assert_eq!(c.experiment.kind(), "solve");
        assert_eq!(c.hash(), ExperimentConfig::from_json(SOLVE).unwrap().hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn errors_carry_paths() {
        let e = ExperimentConfig::from_json(r#"{"experiment": {"kind": "solve", "set": {"points": [[0, 0]]}, "tolerance": "x"}}"#)
            .unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "experiment.tolerance"), "{e}");
        let e = ExperimentConfig::from_json(
            r#"{"experiment": {"kind": "spectrum-sweep", "delta": -0.5, "big_k": [4, 5], "betas": [3]}}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "experiment.delta"), "{e}");
    }

    #[test]
    fn seeds_differ_by_stage() {
        assert_ne!(derive_seed(1, "mc"), derive_seed(1, "trace"));
        assert_eq!(derive_seed(1, "mc"), derive_seed(1, "mc"));
    }
}
