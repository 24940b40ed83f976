use std::fs::File;
use std::io::{stdout, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use harmlab::audit::{build_tree, exact_measure, partition_leaves, spectrum, AuditConfig};
use harmlab::dirichlet::{kernel_hitting, mc_hitting, solve_hitting, HittingDistribution, HittingProblem};
use harmlab::forge::{cantor_set, family, plan_cantor, CantorSpec, FamilyParams, FAMILY_NAMES};
use harmlab::hausdorff::{frostman_measure, h_rho_bounds, m_rho};
use harmlab::lab::{self, ExperimentConfig, RunManifest};
use harmlab::lattice::io as setio;
use harmlab::potential::{canonical_points, green, potential_kernel, PotentialTable};
use harmlab::{Error, LatticeSet, Point};

/// Discrete harmonic measure experiments on the integer lattice.
#[derive(Parser)]
#[command(name = "harmlab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green's function (d >= 3) or potential kernel (d = 2) at a point.
    Potential(PotentialArgs),
    /// Exact first-entrance distribution.
    Solve(SolveArgs),
    /// Monte Carlo first-entrance distribution with Wilson intervals.
    Mc(McArgs),
    /// l-adic Hausdorff content and the bracket on the ball content.
    Content(ContentArgs),
    /// Frostman measure of a set.
    Frostman(FrostmanArgs),
    /// Test-set generators.
    #[command(subcommand)]
    Forge(ForgeCmd),
    /// Cube-tree audit of the large-measure count.
    Audit(AuditArgs),
    /// Counts of points with harmonic measure at least n^-beta.
    Spectrum(SpectrumArgs),
    /// Run an experiment config and write its manifest.
    Run(RunArgs),
    /// Consolidate run manifests.
    Report(ReportArgs),
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    point: Option<Point>,
    /// dump canonical points up to this radius as CSV
    #[arg(long)]
    table_radius: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SetArgs {
    /// point file (text or binary)
    #[arg(long)]
    set: PathBuf,
    /// defaults to the middle of the bounding box
    #[arg(long)]
    start: Option<Point>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Kernel,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value = "100000", value_parser = count)]
    walks: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1000000", value_parser = count)]
    max_steps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ContentArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value_t = 2)]
    l: u64,
    #[arg(long)]
    rho: f64,
    /// also print the optimal cover
    #[arg(long)]
    cover: bool,
}

#[derive(Args)]
struct FrostmanArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value_t = 2)]
    l: u64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ForgeCmd {
    /// Product of a one-dimensional deletion Cantor set.
    Cantor {
        #[arg(long = "K")]
        big_k: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deletion fraction, count exponent and depth ratio for a target dimension.
    Plan {
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        c: f64,
    },
    /// Named comparison family.
    Family {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 8)]
        n: i64,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long)]
        centre: Option<Point>,
        #[arg(long, default_value_t = 1)]
        width: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value_t = 12)]
    l: u64,
    #[arg(long, default_value_t = 1.9)]
    rho: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long)]
    c4: Option<f64>,
    #[arg(long)]
    ctilde: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    k_star: Option<u32>,
    /// spectrum exponents to include in the report
    #[arg(long = "beta")]
    betas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long = "beta", required = true)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// side n of the comparison scale; defaults to the extent of the set
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// overrides the config's output directory; relative to the working directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

/// Accepts `250000` as well as `2.5e5`.
fn count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a nonnegative integer")),
    }
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(stdout())),
    })
}

fn load_set(path: &Path) -> anyhow::Result<LatticeSet> {
    setio::load(path).with_context(|| format!("reading {}", path.display()))
}

fn load_with_start(a: &SetArgs) -> anyhow::Result<(LatticeSet, Point)> {
    let set = load_set(&a.set)?;
    if set.is_empty() {
        bail!(Error::EmptySet);
    }
    let x = lab::start_point(&set, &a.start);
    Ok((set, x))
}

fn write_dist(nu: &HittingDistribution, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let mut w = output(out)?;
    nu.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn potential(a: PotentialArgs) -> anyhow::Result<bool> {
    if let Some(r) = a.table_radius {
        let table = PotentialTable::new(a.d)?;
        let pts = canonical_points(a.d, r);
        table.populate(&pts)?;
        let mut w = output(&a.out)?;
        table.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = a.point {
        if p.dim() != a.d {
            bail!(Error::DimensionMismatch { expected: a.d, got: p.dim() });
        }
        let (name, e) = if a.d == 2 { ("a", potential_kernel(&p)?) } else { ("G", green(&p)?) };
        println!("{name}({p}) = {:.15} (quadrature error {:.1e})", e.value, e.error);
    } else if a.table_radius.is_none() {
        bail!("give --point or --table-radius");
    }
    Ok(true)
}

fn solve(a: SolveArgs) -> anyhow::Result<bool> {
    let (set, x) = load_with_start(&a.set)?;
    let nu = match a.method {
        Method::Exact => solve_hitting(&HittingProblem::new(set, x)?.with_tolerance(a.tol)?)?,
        Method::Kernel => kernel_hitting(&set, &x)?,
    };
    write_dist(&nu, &a.out)?;
    Ok(true)
}

fn mc(a: McArgs) -> anyhow::Result<bool> {
    let (set, x) = load_with_start(&a.set)?;
    let nu = mc_hitting(&HittingProblem::new(set, x)?, a.seed, a.walks, a.max_steps)?;
    write_dist(&nu, &a.out)?;
    if nu.capped_mass > 0.0 {
        eprintln!("warning: {} of the walks hit the step cap", nu.capped_mass);
    }
    Ok(true)
}

fn content(a: ContentArgs) -> anyhow::Result<bool> {
    let set = load_set(&a.set)?;
    let m = m_rho(&set, a.l, a.rho)?;
    let h = h_rho_bounds(&set, a.l, a.rho)?;
    println!("m_rho = {:.15}", m.value);
    println!("h_rho in [{:.15}, {:.15}]", h.lower, h.upper);
    if a.cover {
        println!("{}", serde_json::to_string_pretty(&m.covering)?);
    }
    Ok(true)
}

fn frostman(a: FrostmanArgs) -> anyhow::Result<bool> {
    let set = load_set(&a.set)?;
    let f = frostman_measure(&set, a.l, a.rho)?;
    let mut w = output(&a.out)?;
    f.measure.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("total mass {:.15}, {} saturated cubes", f.measure.total(), f.saturated.len());
    Ok(true)
}

fn save_or_print(set: &LatticeSet, out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(p) => setio::save(set, p)?,
        None => {
            let mut w = BufWriter::new(stdout());
            setio::write_text(set, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn forge(c: ForgeCmd) -> anyhow::Result<bool> {
    match c {
        ForgeCmd::Cantor { big_k, delta, k, d, out } => {
            let a = cantor_set(&CantorSpec::new(big_k, delta, k, d)?)?;
            save_or_print(&a.set, &out)?;
            eprintln!(
                "n = {}, |A| = {}, |boundary| = {} (formula {:.1})",
                a.spec.n(),
                a.size,
                a.boundary_size,
                a.boundary_formula
            );
        }
        ForgeCmd::Plan { rho, d, c } => {
            println!("{}", serde_json::to_string_pretty(&plan_cantor(rho, d, c)?)?);
        }
        ForgeCmd::Family { name, n, d, radius, centre, width, seed, steps, out } => {
            if !FAMILY_NAMES.contains(&name.as_str()) {
                bail!(Error::UnknownFamily(format!("{name} (known: {})", FAMILY_NAMES.join(", "))));
            }
            let params = FamilyParams { n, d, radius, centre, width, seed, steps };
            save_or_print(&family(&name, &params)?, &out)?;
        }
    }
    Ok(true)
}

fn audit(a: AuditArgs) -> anyhow::Result<bool> {
    let (set, x) = load_with_start(&a.set)?;
    let defaults = AuditConfig::for_dim(set.dim());
    let config = AuditConfig {
        d: set.dim(),
        l: a.l,
        rho: a.rho,
        delta: a.delta,
        q: a.q,
        c4: a.c4.unwrap_or(defaults.c4),
        ctilde: a.ctilde.unwrap_or(defaults.ctilde),
        solver_tolerance: a.tol,
        k_star: a.k_star,
    };
    let tree = build_tree(&set, &x, &config)?;
    let part = partition_leaves(&tree);
    let invariants = tree.check_invariants(&set);
    let neither = tree.counterexamples();
    let decay = tree.decay_violations();
    let mut spec = Vec::new();
    if !a.betas.is_empty() {
        let nu = exact_measure(&set, &x, a.tol)?;
        for &b in &a.betas {
            spec.push(spectrum(&nu, set.extent().max(2), b)?);
        }
    }
    let report = json!({
        "config": config,
        "start": x,
        "tree": tree,
        "partition": part,
        "spectrum": spec,
        "counterexamples": neither.iter().map(|&i| &tree.nodes[i]).collect::<Vec<_>>(),
        "decay_violations": decay,
        "invariant_failures": invariants,
    });
    let mut w = output(&a.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    for msg in &tree.warnings {
        eprintln!("warning: {msg}");
    }
    eprintln!(
        "{} nodes, {} leaves, {} failing both tests, {} decay violations",
        tree.nodes.len(),
        tree.leaves().len(),
        neither.len(),
        decay.len()
    );
    Ok(neither.is_empty() && decay.is_empty() && invariants.is_empty())
}

fn spectrum_cmd(a: SpectrumArgs) -> anyhow::Result<bool> {
    let (set, x) = load_with_start(&a.set)?;
    let nu = exact_measure(&set, &x, a.tol)?;
    let n = a.n.unwrap_or(set.extent());
    let mut w = output(&a.out)?;
    writeln!(w, "n,beta,count,rhoHat")?;
    for &b in &a.betas {
        let r = spectrum(&nu, n, b)?;
        writeln!(w, "{},{},{},{:.12}", r.n, r.beta, r.count, r.rho_hat)?;
    }
    w.flush()?;
    Ok(true)
}

fn run_cmd(a: RunArgs) -> anyhow::Result<bool> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(dir) = a.out_dir {
        config.output_dir = std::env::current_dir()?.join(dir);
    }
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let outcome = lab::run(&config, &base)?;
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    for c in outcome.manifest.violations() {
        eprintln!("violation: {}: {}", c.name, c.detail);
    }
    println!("{}", outcome.manifest_path.display());
    Ok(outcome.exit_code() == 0)
}

fn report_cmd(a: ReportArgs) -> anyhow::Result<bool> {
    let mut manifests = Vec::new();
    for p in &a.manifests {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        manifests.push(m);
    }
    let r = lab::report(&manifests)?;
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&r)?)?;
    }
    let md = r.to_markdown();
    match &a.markdown {
        Some(p) => std::fs::write(p, md)?,
        None => print!("{md}"),
    }
    Ok(!r.failed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = lab::init_threads().map_err(anyhow::Error::from).and_then(|_| match cli.cmd {
        Cmd::Potential(a) => potential(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Mc(a) => mc(a),
        Cmd::Content(a) => content(a),
        Cmd::Frostman(a) => frostman(a),
        Cmd::Forge(c) => forge(c),
        Cmd::Audit(a) => audit(a),
        Cmd::Spectrum(a) => spectrum_cmd(a),
        Cmd::Run(a) => run_cmd(a),
        Cmd::Report(a) => report_cmd(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Config { .. })));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
