mod common;

use harmlab::potential::{canonical_points, fit_envelope, green, potential_kernel, PotentialTable};
use harmlab::Point;
use proptest::prelude::*;

fn laplacian(f: impl Fn(&Point) -> f64, x: &Point) -> f64 {
    let d = x.dim() as f64;
    x.neighbors().map(|y| f(&y)).sum::<f64>() / (2.0 * d) - f(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_is_harmonic_off_the_origin(c in prop::collection::vec(-9i64..10, 3)) {
        let x = Point::new(&c);
        let g = |p: &Point| green(p).unwrap().value;
        let want = if x == Point::origin(3) { -1.0 } else { 0.0 };
        prop_assert!((laplacian(g, &x) - want).abs() < 1e-7);
    }

    #[test]
    fn kernel_is_harmonic_off_the_origin(c in prop::collection::vec(-30i64..31, 2)) {
        let x = Point::new(&c);
        let a = |p: &Point| potential_kernel(p).unwrap().value;
        let want = if x == Point::origin(2) { 1.0 } else { 0.0 };
        prop_assert!((laplacian(a, &x) - want).abs() < 1e-7);
    }

    #[test]
    fn hyperoctahedral_symmetry(c in prop::collection::vec(-12i64..13, 3), perm in 0usize..6, signs in 0u8..8) {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let y: Vec<i64> = (0..3)
            .map(|i| if signs >> i & 1 == 1 { -c[PERMS[perm][i]] } else { c[PERMS[perm][i]] })
            .collect();
        prop_assert_eq!(green(&Point::new(&c)).unwrap().value, green(&Point::new(&y)).unwrap().value);
        let rot = Point::new(&[-c[1], c[0]]);
        prop_assert_eq!(potential_kernel(&Point::new(&c[..2])).unwrap().value, potential_kernel(&rot).unwrap().value);
    }
}

#[test]
fn green_decays_along_axes() {
    for axis in 0..3 {
        let mut prev = f64::INFINITY;
        for r in 0..40 {
            let g = green(&Point::origin(3).with(axis, r)).unwrap().value;
            assert!(g < prev);
            prev = g;
        }
    }
}

#[test]
fn neighbour_values_follow_from_harmonicity() {
    let g0 = green(&Point::origin(3)).unwrap().value;
    assert!((g0 - common::WATSON_G0).abs() < 1e-12);
    let g1 = green(&Point::from([1, 0, 0])).unwrap().value;
    assert!((g1 - (g0 - 1.0)).abs() < 1e-12);
    assert!(green(&Point::origin(2)).is_err());
    assert_eq!(potential_kernel(&Point::from([1, 0])).unwrap().value, 1.0);
    // a(1,1) = 4/pi
    let a11 = potential_kernel(&Point::from([1, 1])).unwrap().value;
    assert!((a11 - 4.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn table_agrees_with_direct_evaluation() {
    let t = PotentialTable::new(3).unwrap();
    let pts = canonical_points(3, 4);
    t.populate(&pts).unwrap();
    for p in &pts {
        assert_eq!(t.get(p).unwrap(), green(p).unwrap().value);
    }
    assert_eq!(t.get(&Point::from([0, -2, 1])).unwrap(), green(&Point::from([2, 1, 0])).unwrap().value);
    let mut csv = Vec::new();
    t.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), pts.len() + 1);
}

#[test]
fn envelope_brackets_the_table() {
    let t = PotentialTable::new(3).unwrap();
    let env = fit_envelope(&t, 12).unwrap();
    let (c1, c2) = (env.c1.unwrap(), env.c2.unwrap());
    assert!(c2 <= env.leading && env.leading <= c1);
    for (p, e) in t.entries() {
        let r = p.norm();
        assert!(e.value >= c2 / r - 1e-12 && e.value <= c1 / r + 1e-12, "{p}");
    }
    let planar = fit_envelope(&PotentialTable::new(2).unwrap(), 30).unwrap();
    assert!((planar.leading - common::kernel_constant_oracle()).abs() < 1e-8);
    assert!(planar.c.unwrap() < 0.1);
}
