use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{derive_seed, CantorAuditSpec, ConstantsSpec, Experiment, ExperimentConfig, McSpec, SolveMethod, SolveSpec, SweepSpec, TreeAuditSpec, CODE_VERSION};
use crate::audit::{
    build_tree, check_chain_bound, estimate_chain_constants, exact_measure, layer_constants_estimate, partition_leaves,
    spectrum, trapping_check, TriState,
};
use crate::dirichlet::{kernel_hitting, mc_hitting, solve_hitting, HittingDistribution, HittingProblem};
use crate::error::Result;
use crate::forge::{cantor_set, plan_cantor, rho_from_delta, CantorSpec};
use crate::lattice::{LatticeBox, LatticeSet, Point};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

/// A pass/fail/ambiguous comparison against a stated inequality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: TriState,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), status: if pass { TriState::Pass } else { TriState::Fail }, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: Option<String>,
    pub kind: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub d: Option<usize>,
    pub wall_seconds: f64,
    pub stages: Vec<Stage>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    /// numbers the report aggregates, e.g. `series` of `[n, count]` pairs
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn violations(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == TriState::Fail).collect()
    }
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    /// 0 when no check failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.violations().is_empty() {
            0
        } else {
            1
        }
    }
}

struct Ctx {
    out: PathBuf,
    base: PathBuf,
    stages: Vec<Stage>,
    warnings: Vec<String>,
    checks: Vec<Check>,
    artifacts: Vec<PathBuf>,
    d: Option<usize>,
}

impl Ctx {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let r = f()?;
        self.stages.push(Stage { name: name.to_string(), seconds: t.elapsed().as_secs_f64() });
        Ok(r)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        self.artifacts.push(PathBuf::from(name));
        Ok(BufWriter::new(fs::File::create(self.out.join(name))?))
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    }
}

/// The given start, or the lower middle of the bounding box.
pub fn start_point(set: &LatticeSet, start: &Option<Point>) -> Point {
    start.clone().unwrap_or_else(|| {
        let b = set.bbox().expect("nonempty set");
        let mid: Vec<i64> = b.lo.coords().iter().zip(b.hi.coords()).map(|(lo, hi)| (lo + hi).div_euclid(2)).collect();
        Point::new(&mid)
    })
}

/// Executes one experiment, writing its artifacts and `manifest.json` to the
/// output directory (relative paths resolve against `base`).
pub fn run(config: &ExperimentConfig, base: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let out = base.join(&config.output_dir);
    fs::create_dir_all(&out)?;
    let t0 = Instant::now();
    let mut ctx = Ctx {
        out: out.clone(),
        base: base.to_path_buf(),
        stages: Vec::new(),
        warnings: Vec::new(),
        checks: Vec::new(),
        artifacts: Vec::new(),
        d: None,
    };
    let summary = match &config.experiment {
        Experiment::Solve(s) => run_solve(&mut ctx, s)?,
        Experiment::Mc(m) => run_mc(&mut ctx, m, derive_seed(config.seed, "mc"))?,
        Experiment::SpectrumSweep(s) => run_sweep(&mut ctx, s)?,
        Experiment::CantorAudit(c) => run_cantor_audit(&mut ctx, c)?,
        Experiment::TreeAudit(t) => run_tree_audit(&mut ctx, t)?,
        Experiment::ConstantsEstimate(c) => run_constants(&mut ctx, c)?,
    };
    let manifest = RunManifest {
        name: config.name.clone(),
        kind: config.experiment.kind().to_string(),
        config_hash: config.hash(),
        code_version: CODE_VERSION.to_string(),
        seed: config.seed,
        d: ctx.d,
        wall_seconds: t0.elapsed().as_secs_f64(),
        stages: ctx.stages,
        warnings: ctx.warnings,
        checks: ctx.checks,
        artifacts: ctx.artifacts,
        summary,
    };
    let manifest_path = out.join("manifest.json");
    let mut w = BufWriter::new(fs::File::create(&manifest_path)?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(RunOutcome { manifest, manifest_path })
}

fn write_dist(ctx: &mut Ctx, nu: &HittingDistribution) -> Result<()> {
    let mut w = ctx.create("dist.csv")?;
    nu.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_solve(ctx: &mut Ctx, s: &SolveSpec) -> Result<serde_json::Value> {
    let set = s.set.load(&ctx.base)?;
    ctx.d = Some(set.dim());
    let x = start_point(&set, &s.start);
    let nu = ctx.stage("solve", || match s.method {
        SolveMethod::Exact => solve_hitting(&HittingProblem::new(set.clone(), x.clone())?.with_tolerance(s.tolerance)?),
        SolveMethod::Kernel => kernel_hitting(&set, &x),
    })?;
    write_dist(ctx, &nu)?;
    ctx.checks.push(Check::new(
        "mass conservation",
        (nu.total() - 1.0).abs() <= 1e-6,
        format!("hit {:.12} escaped {:.3e}", nu.hit_mass(), nu.escaped_mass),
    ));
    if nu.hit_mass() < 1.0 - 1e-6 && set.dim() == 2 {
        ctx.warnings.push(format!("planar hit mass {} below 1", nu.hit_mass()));
    }
    Ok(json!({"hit_mass": nu.hit_mass(), "escaped_mass": nu.escaped_mass, "support": nu.support().len()}))
}

fn run_mc(ctx: &mut Ctx, m: &McSpec, seed: u64) -> Result<serde_json::Value> {
    let set = m.set.load(&ctx.base)?;
    ctx.d = Some(set.dim());
    let x = start_point(&set, &m.start);
    let nu = ctx.stage("mc", || mc_hitting(&HittingProblem::new(set.clone(), x.clone())?, seed, m.walks, m.max_steps))?;
    write_dist(ctx, &nu)?;
    ctx.checks.push(Check::new(
        "walk accounting",
        (nu.total() - 1.0).abs() <= 1e-9,
        format!("hit {:.6} escaped {:.6} capped {:.6}", nu.hit_mass(), nu.escaped_mass, nu.capped_mass),
    ));
    if nu.capped_mass > 0.0 {
        ctx.warnings.push(format!("{} of the walks hit the step cap", nu.capped_mass));
    }
    Ok(json!({"seed": seed, "hit_mass": nu.hit_mass(), "capped_mass": nu.capped_mass}))
}

fn run_sweep(ctx: &mut Ctx, s: &SweepSpec) -> Result<serde_json::Value> {
    ctx.d = Some(s.d);
    let mut rows = Vec::new();
    let mut series: Vec<(f64, Vec<(i64, usize)>)> = s.betas.iter().map(|&b| (b, Vec::new())).collect();
    for big_k in s.big_k[0]..=s.big_k[1] {
        let spec = CantorSpec::new(big_k, s.delta, s.k_for(big_k), s.d)?;
        let a = cantor_set(&spec)?;
        let nu = ctx.stage(&format!("solve K={big_k}"), || exact_measure(&a.set, &a.centre(), s.tolerance))?;
        let n = a.set.extent();
        let mut prev: Option<f64> = None;
        for (i, &beta) in s.betas.iter().enumerate() {
            let r = spectrum(&nu, n, beta)?;
            if r.count > a.boundary_size + 1 {
                ctx.checks.push(Check::new("count within boundary", false, format!("K={big_k} beta={beta}")));
            }
            if let Some(p) = prev {
                if r.rho_hat < p && beta > s.betas[i - 1] {
                    ctx.checks.push(Check::new("nested level sets", false, format!("K={big_k} beta={beta}")));
                }
            }
            prev = Some(r.rho_hat);
            series[i].1.push((n, r.count));
            rows.push((big_k, n, beta, r.count, r.rho_hat, a.boundary_size));
        }
        if (a.size as f64 - (a.line.len() as f64).powi(s.d as i32)).abs() > 0.0 {
            ctx.checks.push(Check::new("product size", false, format!("K={big_k}")));
        }
    }
    let mut w = ctx.create("spectrum.csv")?;
    writeln!(w, "K,n,beta,count,rho_hat,boundary")?;
    for (k, n, b, c, r, bd) in &rows {
        writeln!(w, "{k},{n},{b},{c},{r:.12},{bd}")?;
    }
    w.flush()?;
    let max_rho = rows.iter().map(|r| r.4).fold(f64::NEG_INFINITY, f64::max);
    ctx.checks.push(Check::new("rho_hat below d", max_rho < s.d as f64, format!("max rho_hat {max_rho:.6}")));
    if !ctx.checks.iter().any(|c| c.name == "nested level sets") {
        ctx.checks.push(Check::new("nested level sets", true, "rho_hat non-decreasing in beta"));
    }
    Ok(json!({
        "max_rho_hat": max_rho,
        "series": series.iter().map(|(b, pts)| json!({"label": format!("beta={b}"), "points": pts})).collect::<Vec<_>>(),
    }))
}

fn run_cantor_audit(ctx: &mut Ctx, c: &CantorAuditSpec) -> Result<serde_json::Value> {
    ctx.d = Some(c.d);
    let first = cantor_set(&CantorSpec::new(c.big_k[0], c.delta, c.k, c.d)?)?;
    let est = ctx.stage("constants", || estimate_chain_constants(&first, c.tolerance))?;
    let cc = c.c.unwrap_or(est.c);
    let ct = c.c_tilde.unwrap_or(est.c_tilde);
    let rho = rho_from_delta(c.delta, c.d);
    let beta = if cc > 1.0 && rho < c.d as f64 { Some(plan_cantor(rho, c.d, cc)?.beta) } else { None };
    if beta.is_none() {
        ctx.warnings.push("no planner beta: c must exceed 1".to_string());
    }
    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for big_k in c.big_k[0]..=c.big_k[1] {
        let a = cantor_set(&CantorSpec::new(big_k, c.delta, c.k, c.d)?)?;
        let chk = ctx.stage(&format!("chain K={big_k}"), || check_chain_bound(&a, cc, ct, c.tolerance))?;
        let n = a.set.extent();
        let count = match beta {
            Some(b) => spectrum(&exact_measure(&a.set, &a.centre(), c.tolerance)?, n, b)?.count,
            None => 0,
        };
        ctx.checks.push(Check::new(
            format!("chain bound K={big_k}"),
            chk.violations.is_empty(),
            format!("min nu {:.6e} vs bound {:.6e}, {} violations", chk.min_nu, chk.bound, chk.violations.len()),
        ));
        let drift = (a.boundary_size as f64 / a.boundary_formula - 1.0).abs();
        if drift > 0.25 {
            ctx.warnings.push(format!("K={big_k}: boundary differs from the formula by {:.1}%", 100.0 * drift));
        }
        counts.push((n, count));
        rows.push((big_k, n, a.boundary_size, chk.bound, chk.min_nu, chk.violations.len(), count));
    }
    let mut w = ctx.create("cantor_audit.csv")?;
    writeln!(w, "K,n,boundary,bound,min_nu,violations,count")?;
    for (k, n, b, bound, m, v, cnt) in &rows {
        writeln!(w, "{k},{n},{b},{bound:.12e},{m:.12e},{v},{cnt}")?;
    }
    w.flush()?;
    ctx.write_json("constants.json", &est)?;
    Ok(json!({
        "c": cc,
        "c_tilde": ct,
        "beta": beta,
        "series": [{"label": "planner beta", "points": counts}],
    }))
}

fn run_tree_audit(ctx: &mut Ctx, t: &TreeAuditSpec) -> Result<serde_json::Value> {
    let set = t.set.load(&ctx.base)?;
    ctx.d = Some(set.dim());
    let x = start_point(&set, &t.start);
    let tree = ctx.stage("tree", || build_tree(&set, &x, &t.audit))?;
    let part = partition_leaves(&tree);
    let bad = tree.check_invariants(&set);
    ctx.checks.push(Check::new("tree invariants", bad.is_empty(), bad.join("; ")));
    let neither = tree.counterexamples();
    let detail: Vec<String> = neither
        .iter()
        .map(|&i| {
            let n = &tree.nodes[i];
            let v = n.verdict.as_ref().expect("classified");
            format!(
                "{:?} level {}: content {:.6} vs {:.6}, omega {:?} / {:?}",
                n.cube.corner, n.cube.level, v.content, v.weight, v.omega_lbar, v.omega_c
            )
        })
        .collect();
    ctx.checks.push(Check::new("(H) or (L) at every node", neither.is_empty(), detail.join("; ")));
    let decay = tree.decay_violations();
    ctx.checks.push(Check::new("decay along inner steps", decay.is_empty(), format!("{} violations", decay.len())));
    ctx.warnings.extend(tree.warnings.iter().cloned());
    if part.flooring_changes {
        ctx.warnings.push("rounding k1, k2 down changes the leaf partition".to_string());
    }
    ctx.write_json("tree.json", &tree)?;
    ctx.write_json("partition.json", &part)?;
    let mut spec_rows = Vec::new();
    if !t.betas.is_empty() {
        let shifted = set.translate(&tree.shift);
        let nu = exact_measure(&shifted, &tree.start, t.audit.solver_tolerance)?;
        for &b in &t.betas {
            spec_rows.push(spectrum(&nu, set.extent().max(2), b)?);
        }
        ctx.write_json("spectrum.json", &spec_rows)?;
    }
    Ok(json!({
        "nodes": tree.nodes.len(),
        "leaves": tree.leaves().len(),
        "neither": neither.len(),
        "less": part.less.len(),
        "inner": part.inner.len(),
        "outer": part.outer.len(),
        "sum_less": part.sum_less,
        "less_bound": part.less_bound,
        "sum_outer": part.sum_outer,
        "outer_bound": part.outer_bound,
    }))
}

fn run_constants(ctx: &mut Ctx, c: &ConstantsSpec) -> Result<serde_json::Value> {
    ctx.d = Some(c.audit.d);
    let est = ctx.stage("layers", || layer_constants_estimate(&c.audit, c.levels))?;
    ctx.checks.push(Check::new("c4 in (0, 1)", est.c4 > 0.0 && est.c4 < 1.0, format!("c4 = {:.12}", est.c4)));
    ctx.write_json("layers.json", &est)?;
    let mut trap = None;
    if let Some(src) = &c.trapping_set {
        let set = src.load(&ctx.base)?;
        let q = LatticeBox::cube(Point::origin(c.audit.d), c.trapping_side);
        let r = ctx.stage("trapping", || trapping_check(&set, &q, &c.audit))?;
        ctx.checks.push(Check {
            name: "trapping dichotomy".to_string(),
            status: r.dichotomy,
            detail: format!("min omega {:.6}, h in [{:.4}, {:.4}]", r.min_omega, r.h_lower, r.h_upper),
        });
        ctx.checks.push(Check::new(
            "trapping bound",
            r.violations.is_empty(),
            format!("critical ctilde {:.6}", r.critical_ctilde),
        ));
        trap = Some(r.critical_ctilde);
        ctx.write_json("trapping.json", &r)?;
    }
    Ok(json!({"c4": est.c4, "critical_ctilde": trap}))
}
