mod common;

use harmlab::dirichlet::{
    conditioned_measure, harnack_ratio, kernel_hitting, mc_hitting, measure_from_infinity, omega, simulate,
    solve_hitting, solve_truncated, HittingProblem, OmegaField, RadiusSchedule,
};
use harmlab::{LatticeBox, LatticeSet, Point};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn problem(d: usize) -> impl Strategy<Value = (LatticeSet, Point)> {
    (prop::collection::vec(prop::collection::vec(-3i64..4, d), 1..6), prop::collection::vec(-6i64..7, d)).prop_filter_map(
        "start inside the set",
        move |(pts, x)| {
            let a = LatticeSet::from_points(d, pts.iter().map(|c| Point::new(c))).unwrap();
            let x = Point::new(&x);
            (!a.contains(&x)).then_some((a, x))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, rng_seed: RngSeed::Fixed(17), ..ProptestConfig::default() })]

    #[test]
    fn exact_solve_conserves_mass((a, x) in problem(3)) {
        let nu = solve_hitting(&HittingProblem::new(a.clone(), x).unwrap().with_tolerance(1e-5).unwrap()).unwrap();
        prop_assert!((nu.total() - 1.0).abs() < 1e-9);
        prop_assert!(nu.support().iter().all(|y| a.contains(y)));
        prop_assert!(nu.iter().all(|(_, v)| v >= 0.0));
    }

    #[test]
    fn kernel_route_matches_grid_solver((a, x) in problem(2)) {
        let grid = solve_hitting(&HittingProblem::new(a.clone(), x.clone()).unwrap()).unwrap();
        let kern = kernel_hitting(&a, &x).unwrap();
        for y in a.iter() {
            prop_assert!((grid.get(y) - kern.get(y)).abs() < 1e-5, "{} {} {}", y, grid.get(y), kern.get(y));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn planar_solve_is_recurrent((a, x) in problem(2)) {
        let nu = solve_hitting(&HittingProblem::new(a, x).unwrap()).unwrap();
        prop_assert!(nu.escaped_mass < 1e-6);
        prop_assert!((nu.hit_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn truncation_is_monotone_in_the_guard((a, x) in problem(2)) {
        let p = HittingProblem::new(a.clone(), x.clone()).unwrap();
        let small = p.initial_guard();
        let big = small.expand(small.side(0));
        let lo = solve_truncated(&a, &x, &small).unwrap();
        let hi = solve_truncated(&a, &x, &big).unwrap();
        for y in a.iter() {
            prop_assert!(hi.get(y) >= lo.get(y) - 1e-10);
        }
        prop_assert!(hi.escaped_mass <= lo.escaped_mass + 1e-10);
    }

    #[test]
    fn omega_field_is_harmonic(side in 6i64..14, pts in prop::collection::vec((0i64..14, 0i64..14), 1..8)) {
        let q = LatticeBox::cube(Point::origin(2), side);
        let a = LatticeSet::from_points(2, pts.iter().map(|&(i, j)| Point::from([i % side, j % side]))).unwrap();
        let f = OmegaField::new(&q, &a, &a).unwrap();
        prop_assert!(f.harmonicity_defect() < 1e-9);
        for x in q.points() {
            let v = f.get(&x);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }
}

#[test]
fn monte_carlo_within_three_intervals() {
    let a = LatticeSet::from_points(3, [Point::from([0, 0, 0]), Point::from([2, 0, 0]), Point::from([1, 1, 0])]).unwrap();
    let x = Point::from([1, -3, 2]);
    let p = HittingProblem::new(a.clone(), x.clone()).unwrap();
    let guard = p.initial_guard();
    let batch = simulate(&p, &guard, 11, 50_000, u64::MAX).unwrap();
    let exact = solve_truncated(&a, &x, &guard).unwrap();
    for y in a.iter() {
        assert!(batch.interval(y).contains(exact.get(y)), "{y}");
    }
    assert_eq!(batch.hit_count() + batch.escaped + batch.capped, 50_000);
    let mc = mc_hitting(&p, 11, 50_000, u64::MAX).unwrap();
    assert!((mc.total() - 1.0).abs() < 1e-12);
}

#[test]
fn conditioning_examples() {
    let a = LatticeSet::from_points(3, [Point::from([0, 0, 0])]).unwrap();
    let nu = solve_hitting(&HittingProblem::new(a, Point::from([4, 0, 0])).unwrap()).unwrap();
    let c = conditioned_measure(&nu).unwrap();
    assert_eq!(c.escaped_mass, 0.0);
    assert!((c.get(&Point::origin(3)) - 1.0).abs() < 1e-12);

    let b = LatticeSet::from_points(2, [Point::from([-1, 0]), Point::from([1, 0])]).unwrap();
    let nu2 = solve_hitting(&HittingProblem::new(b, Point::from([3, 2])).unwrap()).unwrap();
    let c2 = conditioned_measure(&nu2).unwrap();
    for (y, v) in nu2.iter() {
        assert!((c2.get(y) - v).abs() < 1e-6);
    }
}

#[test]
fn omega_examples() {
    let q = LatticeBox::cube(Point::origin(2), 8);
    let left = LatticeSet::from_points(2, (0..8).map(|j| Point::from([0, j]))).unwrap();
    let centre = Point::from([4, 4]);
    let direct = omega(&q, &left, &left, &centre).unwrap();
    // hitting the left edge before leaving Q, computed as one minus leaving first
    let via_exit = OmegaField::new(&q, &left, &LatticeSet::empty(2)).unwrap().get(&centre);
    assert!(via_exit.abs() < 1e-12);
    let outer = q.outer_boundary();
    let padded = LatticeBox::cube(Point::splat(2, -1), 10);
    let stop = left.union(&outer).unwrap();
    let exit_first = omega(&padded, &stop, &outer, &centre).unwrap();
    assert!((direct + exit_first - 1.0).abs() < 1e-9, "{direct} {exit_first}");
    assert_eq!(omega(&q, &left, &left, &Point::from([0, 3])).unwrap(), 1.0);
    let full = LatticeSet::from_box(&q);
    assert!(omega(&q, &left, &full, &centre).is_err());
}

#[test]
fn measures_from_infinity() {
    let single = LatticeSet::singleton(Point::from([2, 3, 1]));
    let r = measure_from_infinity(&single, &RadiusSchedule::default()).unwrap();
    assert!((r.measure.get(&Point::from([2, 3, 1])) - 1.0).abs() < 1e-12);

    let cube = LatticeSet::from_box(&LatticeBox::cube(Point::from([1, 1]), 4));
    let r = measure_from_infinity(&cube, &RadiusSchedule::default()).unwrap();
    let boundary = cube.boundary().unwrap();
    assert!(r.measure.support().iter().all(|y| boundary.contains(y)));
    assert!((r.measure.hit_mass() - 1.0).abs() < 1e-6);
}

#[test]
fn harnack_constant_stabilises() {
    let c: Vec<f64> = [8, 16, 32].iter().map(|&n| harnack_ratio(2, n).unwrap()).collect();
    assert!(c.iter().all(|&v| v > 1.0));
    let spread = c.iter().cloned().fold(0.0, f64::max) / c.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.05, "{c:?}");
}
