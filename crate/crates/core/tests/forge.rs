mod common;

use proptest::prelude::*;

use harmlab::forge::{
    cantor_set, family, harnack_chain_bound, plan_cantor, rho_from_delta, CantorSpec, FamilyParams, FAMILY_NAMES,
};
use harmlab::{Error, LatticeSet, Point};

use common::boundary_oracle;

fn runs(line: &[i64]) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::new();
    for &t in line {
        match out.last_mut() {
            Some((_, hi)) if *hi + 1 == t => *hi = t,
            _ => out.push((t, t)),
        }
    }
    out
}

fn arb_spec() -> impl Strategy<Value = CantorSpec> {
    (2u32..=9, 0.05f64..0.95, 2usize..=3)
        .prop_flat_map(|(big_k, delta, d)| (Just(big_k), Just(delta), 0..big_k, Just(d)))
        .prop_map(|(big_k, delta, k, d)| {
            let big_k = if d == 3 { big_k.min(6) } else { big_k };
            CantorSpec::new(big_k, delta, k.min(big_k - 1), d).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cantor_construction(spec in arb_spec()) {
        let Ok(a) = cantor_set(&spec) else {
            return Ok(());
        };
        let b = cantor_set(&spec).unwrap();
        prop_assert_eq!(&a.set, &b.set);
        prop_assert_eq!(a.size, a.line.len().pow(spec.d as u32));
        prop_assert_eq!(a.size, a.set.len());
        prop_assert_eq!(a.boundary_size, boundary_oracle(&a.set).len());

        let n = spec.n();
        let mut cover = vec![0u8; n as usize + 1];
        for &t in &a.line {
            cover[t as usize] += 1;
        }
        for g in &a.gaps {
            prop_assert!(g.depth >= 1 && g.depth <= spec.k);
            for t in g.lo..=g.hi {
                cover[t as usize] += 1;
            }
        }
        prop_assert!(cover[1..].iter().all(|&c| c == 1));

        if a.gaps.len() + 1 < 1 << spec.k {
            return Ok(());
        }
        let r = runs(&a.line);
        prop_assert_eq!(r.len(), 1 << spec.k);
        let ideal = (1.0 - spec.delta).powi(spec.k as i32) * 2f64.powi((spec.big_k - spec.k) as i32);
        for &(lo, hi) in &r {
            prop_assert!(((hi - lo + 1) as f64 - ideal).abs() <= spec.k.max(1) as f64, "run {}..{} ideal {}", lo, hi, ideal);
        }
        for i in 0..r.len() {
            let (p, q) = (r[i], r[r.len() - 1 - i]);
            prop_assert!(((p.1 - p.0) - (q.1 - q.0)).abs() <= spec.k as i64);
        }
    }

    #[test]
    fn plan_round_trip(d in 2usize..=4, frac in 0.05f64..0.999, c in 1.01f64..20.0, big_k in 1u32..=30) {
        let rho = frac * d as f64;
        let p = plan_cantor(rho, d, c).unwrap();
        prop_assert!((rho_from_delta(p.delta, d) - rho).abs() <= 1e-12);
        prop_assert!(p.delta > 0.0 && p.delta < 1.0);
        let df = d as f64;
        prop_assert!((p.beta - df + 1.0 - 4.0 * c.ln() / (p.delta * 2f64.ln())).abs() <= 1e-9 * p.beta.abs().max(1.0));
        let keep = 1.0 - p.delta;
        let gamma = (2.0 * keep.powf(3.0 * (df - 1.0))).ln() / (2.0 * keep.powf(df - 1.0)).ln();
        prop_assert!((p.gamma - gamma).abs() <= 1e-9);
        let k = p.k(big_k);
        prop_assert!(k < big_k || big_k == 0);
        if gamma > 0.0 && ((gamma * big_k as f64).floor() as u32) < big_k {
            prop_assert_eq!(k, (gamma * big_k as f64).floor() as u32);
        }
    }

    #[test]
    fn random_walk_trace_is_reproducible(seed in any::<u64>(), steps in 0u64..400, d in 2usize..=3) {
        let p = FamilyParams { d, seed, steps, ..FamilyParams::default() };
        let a = family("rw-trace", &p).unwrap();
        prop_assert_eq!(&a, &family("rw-trace", &p).unwrap());
        prop_assert!(a.len() as u64 <= steps + 1);
        prop_assert!(a.bbox().unwrap().lo == Point::splat(d, 1));
        if a.len() > 1 {
            prop_assert!(a.iter().all(|x| x.neighbors().any(|y| a.contains(&y))));
        }
    }
}

#[test]
fn cantor_examples() {
    let a = cantor_set(&CantorSpec::new(2, 0.5, 1, 2).unwrap()).unwrap();
    assert_eq!(a.line, vec![1, 4]);
    assert_eq!((a.size, a.boundary_size), (4, 4));

    let full = cantor_set(&CantorSpec::new(5, 0.3, 0, 3).unwrap()).unwrap();
    assert_eq!(full.set, LatticeSet::from_box(full.set.bbox().unwrap()));
    assert_eq!(full.size, 32 * 32 * 32);

    let sym = cantor_set(&CantorSpec::new(6, 0.5, 2, 2).unwrap()).unwrap();
    assert!(sym.line.iter().all(|t| sym.line.contains(&(65 - t))));

    assert!(matches!(cantor_set(&CantorSpec::new(3, 0.9, 2, 2).unwrap()), Err(Error::CantorEmpty { depth: 1 })));
    assert!(CantorSpec::new(4, 0.5, 4, 2).is_err());
    assert!(matches!(cantor_set(&CantorSpec::new(4, 0.5, 3, 2).unwrap()), Err(Error::CantorEmpty { depth: 3 })));
    assert!(CantorSpec::new(4, 1.0, 1, 2).is_err());
}

#[test]
fn boundary_formula_is_asymptotic() {
    let mut last = f64::INFINITY;
    for big_k in 5..=11 {
        let a = cantor_set(&CantorSpec::new(big_k, 0.5, 2, 2).unwrap()).unwrap();
        let dev = (a.boundary_size as f64 / a.boundary_formula - 1.0).abs();
        assert!(dev < last, "K={big_k}: discrepancy {dev} did not shrink from {last}");
        last = dev;
    }
    assert!(last < 0.05);
}

#[test]
fn plan_examples() {
    let p = plan_cantor(1.7, 2, 1.8).unwrap();
    assert!((p.delta - (1.0 - 2f64.powf(-0.1))).abs() < 1e-15);
    assert!((p.gamma - 0.777_777_777_777_777_8).abs() < 1e-12);
    let near = plan_cantor(1.9999, 2, 1.8).unwrap();
    assert!(near.delta < 1e-4 && near.beta > 1e4);
    assert!(plan_cantor(2.0, 2, 1.8).is_err());
    assert!(plan_cantor(1.5, 2, 1.0).is_err());
}

#[test]
fn family_examples() {
    let p = |n, d| FamilyParams { n, d, ..FamilyParams::default() };
    let odd = family("odd-lattice", &p(4, 2)).unwrap();
    assert_eq!(odd.points(), &[Point::from([1, 1]), Point::from([1, 3]), Point::from([3, 1]), Point::from([3, 3])]);
    for (n, d) in [(6, 2), (7, 3), (10, 2)] {
        let half = (n + 1) / 2;
        assert_eq!(family("odd-lattice", &p(n, d)).unwrap().len(), (half as usize).pow(d as u32));
        assert_eq!(family("full-cube", &p(n, d)).unwrap().len(), (n as usize).pow(d as u32));
        let slab = family("slab", &FamilyParams { width: 2, ..p(n, d) }).unwrap();
        assert_eq!(slab.len(), 2 * (n as usize).pow(d as u32 - 1));
    }

    let c = Point::from([6, 5]);
    let shell = family("sphere-shell", &FamilyParams { radius: 3.0, centre: Some(c.clone()), ..p(10, 2) }).unwrap();
    let scan: Vec<Point> = (-10..=20)
        .flat_map(|i| (-10..=20).map(move |j| Point::from([i, j])))
        .filter(|x| (2.5..=3.5).contains(&x.dist(&c)))
        .collect();
    assert_eq!(shell.points(), scan.as_slice());

    let walk = family("rw-trace", &FamilyParams { steps: 0, ..p(1, 3) }).unwrap();
    assert_eq!(walk.points(), &[Point::splat(3, 1)]);
    assert!(matches!(family("koch", &p(4, 2)), Err(Error::UnknownFamily(_))));
    assert_eq!(FAMILY_NAMES.len(), 5);
}

#[test]
fn chains_respect_their_step_limits() {
    let a = cantor_set(&CantorSpec::new(6, 0.5, 3, 2).unwrap()).unwrap();
    let (c, ct) = (1.8f64, 0.3);
    let want = c.powf(-4.0 * 3.0 / 0.5) * ct * 2f64.powi(-6);
    for y in a.set.boundary().unwrap().iter() {
        let chain = harnack_chain_bound(&a, y, c, ct).unwrap();
        assert!(chain.steps_within_limits(), "{y}: {:?} vs {:?}", chain.steps, chain.step_limits);
        assert_eq!(chain.points.len(), chain.j0.max(1) as usize);
        assert!(chain.final_distance <= 32.0 * 2f64.sqrt() + 1e-9);
        assert!((chain.bound - want).abs() <= 1e-12 * want);
    }
    let full = cantor_set(&CantorSpec::new(4, 0.5, 0, 2).unwrap()).unwrap();
    let face = harnack_chain_bound(&full, &Point::from([1, 5]), c, ct).unwrap();
    assert_eq!(face.points.len(), 1);
    assert!((face.bound - ct / 16.0).abs() < 1e-15);
    assert!(harnack_chain_bound(&a, &Point::from([20, 20]), c, ct).is_err());
}
