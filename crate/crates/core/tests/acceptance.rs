//! One line per acceptance criterion, written straight to stdout so it shows
//! up without `--nocapture`.

mod common;

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harmlab::audit::{
    build_tree, check_chain_bound, estimate_chain_constants, exact_measure, layer_constants_estimate, spectrum,
    support_core, AuditConfig,
};
use harmlab::dirichlet::{simulate, solve_hitting, solve_truncated, HittingProblem};
use harmlab::forge::{cantor_set, family, plan_cantor, rho_from_delta, CantorSpec, FamilyParams};
use harmlab::hausdorff::{frostman_measure, m_rho};
use harmlab::potential::{green, potential_kernel};
use harmlab::{LatticeSet, Point};

use common::*;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {n:>2} [{}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

#[test]
fn c01_single_point_hitting() {
    let g0 = green(&Point::origin(3)).unwrap().value;
    let a = LatticeSet::singleton(Point::origin(3));
    let mut worst: f64 = 0.0;
    for x in [[1, 0, 0], [3, 2, 1], [10, 0, 0]] {
        let x = Point::from(x);
        let nu = solve_hitting(&HittingProblem::new(a.clone(), x.clone()).unwrap().with_max_doublings(8)).unwrap();
        let want = green(&x).unwrap().value / g0;
        worst = worst.max((nu.hit_mass() - want).abs());
    }
    let anchor = (g0 - WATSON_G0).abs();
    verdict(
        1,
        "single-point hitting identity, d=3",
        worst <= 1e-5 && anchor <= 1e-9,
        format!("max |hit - G(x)/G(0)| = {worst:.2e} (tol 1e-5); |G(0) - Watson| = {anchor:.1e}"),
    );
}

#[test]
fn c02_planar_recurrence() {
    let a = LatticeSet::from_points(2, [Point::from([-1, 0]), Point::from([1, 0])]).unwrap();
    let nu = solve_hitting(&HittingProblem::new(a, Point::from([0, 5])).unwrap().with_tolerance(1e-8).unwrap()).unwrap();
    let dev = [[-1, 0], [1, 0]].iter().map(|p| (nu.get(&Point::from(*p)) - 0.5).abs()).fold(0.0, f64::max);
    verdict(
        2,
        "recurrence of the planar walk",
        nu.escaped_mass < 1e-4 && dev <= 1e-4,
        format!("escaped {:.2e} (tol 1e-4), max |density - 0.5| = {dev:.2e} (tol 1e-4)", nu.escaped_mass),
    );
}

#[test]
fn c03_potential_kernel_anchors() {
    let a0 = potential_kernel(&Point::origin(2)).unwrap().value;
    let a1 = potential_kernel(&Point::from([1, 0])).unwrap().value;
    let mut ks = Vec::new();
    for p in [[50, 0], [36, 36], [80, 60], [120, 35], [0, 150], [141, 141], [200, 0]] {
        let x = Point::from(p);
        ks.push(potential_kernel(&x).unwrap().value - std::f64::consts::FRAC_2_PI * x.norm().ln());
    }
    let spread = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let off = (ks.iter().sum::<f64>() / ks.len() as f64 - kernel_constant_oracle()).abs();
    verdict(
        3,
        "potential kernel anchors",
        a0 == 0.0 && (a1 - 1.0).abs() <= 1e-9 && spread < 1e-4 && off < 1e-4,
        format!("a(0) = {a0}, |a(e1) - 1| = {:.1e}, spread of k = {spread:.2e} (tol 1e-4), |k - (2g + ln 8)/pi| = {off:.1e}", (a1 - 1.0).abs()),
    );
}

#[test]
fn c04_frostman_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases: Vec<(LatticeSet, u64, f64)> = Vec::new();
    for _ in 0..100 {
        let count = rng.gen_range(1..=300);
        let l = [2u64, 3, 4, 8][rng.gen_range(0..4)];
        let rho = rng.gen_range(0.3..2.0);
        cases.push((random_set(&mut rng, 2, 1, 64, count), l, rho));
    }
    for (big_k, delta, k) in [(5, 0.5, 2), (6, 0.25, 3), (6, 0.5, 1), (7, 0.1, 2)] {
        let a = cantor_set(&CantorSpec::new(big_k, delta, k, 2).unwrap()).unwrap();
        for (l, rho) in [(2, 1.0), (2, 1.5), (4, 1.2), (8, 1.8)] {
            cases.push((a.set.clone(), l, rho));
        }
    }
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    for (a, l, rho) in &cases {
        let f = frostman_measure(a, *l, *rho).unwrap();
        let (ratio, _) = max_cube_ratio_oracle(&f.measure, *l, *rho);
        let m = m_rho(a, *l, *rho).unwrap().value;
        let gap = f.measure.total() - m;
        let outside = f.measure.mass.iter().any(|(p, &v)| v < 0.0 || !a.contains(p));
        if ratio > 1.0 + 1e-12 || gap < -1e-9 * m || outside {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(ratio);
        worst_gap = worst_gap.min(gap / m);
    }
    verdict(
        4,
        "Frostman measure invariants",
        violations == 0,
        format!(
            "{} sets, {violations} violations; max mu(C)/|C|^(rho/d) = {worst_ratio:.15}, min (mu(A) - m)/m = {worst_gap:.2e}",
            cases.len()
        ),
    );
}

#[test]
fn c05_content_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let l = rng.gen_range(2u64..=4);
        let count = rng.gen_range(1..=12);
        let rho = rng.gen_range(0.2..=2.0);
        let a = random_set(&mut rng, 2, 1, (l * l) as i64, count);
        let dp = m_rho(&a, l, rho).unwrap().value;
        let bf = brute_force_m_rho(&a, l, rho);
        let err = (dp - bf).abs() / bf;
        worst = worst.max(err);
        if err > 1e-12 {
            mismatches += 1;
        }
    }
    verdict(5, "content DP against exhaustive search", mismatches == 0, format!("200 instances, {mismatches} mismatches, max rel diff {worst:.1e}"));
}

#[test]
fn c06_spectrum_trend() {
    let betas = [2.0, 3.0, 4.0, 6.0];
    let mut rho_max = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut rows = Vec::new();
    for big_k in 4..=8u32 {
        let a = cantor_set(&CantorSpec::new(big_k, 0.5, big_k / 2, 2).unwrap()).unwrap();
        let nu = exact_measure(&a.set, &a.centre(), 1e-6).unwrap();
        let n = a.set.extent();
        let hats: Vec<f64> = betas.iter().map(|&b| spectrum(&nu, n, b).unwrap().rho_hat).collect();
        monotone &= hats.windows(2).all(|w| w[1] <= w[0]);
        rho_max = rho_max.max(hats[1]);
        rows.push(format!("K={big_k}:{:.3}", hats[1]));
    }
    verdict(
        6,
        "spectrum trend on Cantor sets",
        rho_max < 2.0 && monotone,
        format!("rho_hat at beta=3 [{}], max {rho_max:.4} < 2, non-increasing in beta: {monotone}", rows.join(" ")),
    );
}

#[test]
fn c07_lower_bound_mechanism() {
    let base = cantor_set(&CantorSpec::new(4, 0.5, 1, 2).unwrap()).unwrap();
    let consts = estimate_chain_constants(&base, 1e-6).unwrap();
    let beta = plan_cantor(rho_from_delta(0.5, 2), 2, consts.c).unwrap().beta;
    let mut violations = 0;
    let mut pts = Vec::new();
    let mut direct = Vec::new();
    for big_k in 4..=7u32 {
        let a = cantor_set(&CantorSpec::new(big_k, 0.5, 1, 2).unwrap()).unwrap();
        let chk = check_chain_bound(&a, consts.c, consts.c_tilde, 1e-6).unwrap();
        violations += chk.violations.len();
        let n = a.set.extent() as f64;
        let nu = exact_measure(&a.set, &a.centre(), 1e-6).unwrap();
        let count = spectrum(&nu, n as i64, beta).unwrap().count as f64;
        pts.push((n.ln(), count.ln()));
        direct.push((a.boundary_size as f64).ln() / n.ln());
    }
    let slope = pts.iter().map(|(x, y)| x * y).sum::<f64>() / pts.iter().map(|(x, _)| x * x).sum::<f64>();
    let dev = direct.iter().map(|r| (r - slope).abs()).fold(0.0, f64::max);
    verdict(
        7,
        "chain lower bound and planner count",
        violations == 0 && dev <= 0.15,
        format!(
            "c = {:.4}, c~ = {:.4}, beta = {beta:.3}; {violations} bound violations; fitted rho = {slope:.4}, direct [{}], max dev {dev:.3} (tol 0.15)",
            consts.c,
            consts.c_tilde,
            direct.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
    );
}

#[test]
fn c08_dichotomy_audit() {
    let est = layer_constants_estimate(&AuditConfig::default(), 3).unwrap();
    let a = cantor_set(&CantorSpec::new(8, 0.1, 1, 2).unwrap()).unwrap();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for rho in [1.5, 1.9] {
        let config = AuditConfig { rho, k_star: Some(3), c4: est.c4, ..AuditConfig::default() };
        let tree = build_tree(&a.set, &a.centre(), &config).unwrap();
        let neither = tree.counterexamples();
        let broken = tree.check_invariants(&a.set);
        if !neither.is_empty() || !broken.is_empty() {
            failures.push(rho);
        }
        let highs = tree.nodes.iter().filter(|n| n.verdict.as_ref().is_some_and(|v| v.h_holds)).count();
        summary.push(format!("rho={rho}: {} nodes, {highs} with (H), {} with neither", tree.nodes.len(), neither.len()));
    }
    verdict(
        8,
        "every tree node satisfies (H) or (L)",
        failures.is_empty(),
        format!("c4 = {:.4}; {}", est.c4, summary.join("; ")),
    );
}

#[test]
fn c09_monte_carlo_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut inside, mut total) = (0usize, 0usize);
    for i in 0..20 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let count = rng.gen_range(1..=6);
        let a = random_set(&mut rng, d, -3, 3, count);
        let x = loop {
            let p = Point::new(&(0..d).map(|_| rng.gen_range(-5..=5)).collect::<Vec<_>>());
            if !a.contains(&p) {
                break p;
            }
        };
        let problem = HittingProblem::new(a.clone(), x.clone()).unwrap();
        let guard = problem.initial_guard();
        let batch = simulate(&problem, &guard, 1000 + i, 100_000, u64::MAX).unwrap();
        let exact = solve_truncated(&a, &x, &guard).unwrap();
        for y in a.boundary().unwrap().iter() {
            total += 1;
            if batch.interval(y).contains(exact.get(y)) {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    verdict(9, "Monte Carlo intervals cover exact densities", frac >= 0.95, format!("{inside}/{total} = {:.1}% inside (need 95%)", 100.0 * frac));
}

#[test]
fn c10_support_core_extraction() {
    let a = family("odd-lattice", &FamilyParams { n: 4, d: 2, ..FamilyParams::default() }).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for x in [[2, 2], [0, 0], [7, 3]] {
        let nu = exact_measure(&a, &Point::from(x), 1e-9).unwrap();
        let min = nu.iter().map(|(_, v)| v).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        let core = support_core(&nu, 0.5 * min).unwrap();
        let got: BTreeSet<Point> = core.points.iter().cloned().collect();
        let support: BTreeSet<Point> = nu.support().into_iter().collect();
        let full: BTreeSet<Point> = a.iter().cloned().collect();
        ok &= got == support && support == full;
        detail.push(format!("x={}: core {} of {}", Point::from(x), got.len(), full.len()));
    }
    verdict(10, "support core of the odd lattice", ok, detail.join(", "));
}
