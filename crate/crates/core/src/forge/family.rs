use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeBox, LatticeSet, Point};

pub const FAMILY_NAMES: [&str; 5] = ["full-cube", "sphere-shell", "slab", "odd-lattice", "rw-trace"];

/// Parameters shared by the comparison families; each family reads the
/// fields it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyParams {
    pub n: i64,
    pub d: usize,
    /// sphere-shell radius
    pub radius: f64,
    /// sphere-shell centre, default the centre of `{1..n}^d`
    pub centre: Option<Point>,
    /// slab thickness along the first axis
    pub width: i64,
    pub seed: u64,
    /// rw-trace length
    pub steps: u64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { n: 8, d: 2, radius: 3.0, centre: None, width: 1, seed: 0, steps: 100 }
    }
}

pub fn family(name: &str, p: &FamilyParams) -> Result<LatticeSet> {
    if p.d < 2 {
        return Err(Error::InvalidDimension(p.d));
    }
    let d = p.d;
    let cube = || -> Result<LatticeBox> {
        if p.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        Ok(LatticeBox::cube(Point::splat(d, 1), p.n))
    };
    match name {
        "full-cube" => Ok(LatticeSet::from_box(&cube()?)),
        "odd-lattice" => {
            let q = cube()?;
            Ok(LatticeSet::from_points(d, q.points().filter(|x| x.coords().iter().all(|c| c % 2 == 1)))?)
        }
        "slab" => {
            let q = cube()?;
            if p.width < 1 || p.width > p.n {
                return Err(invalid("width", "must lie in 1..=n"));
            }
            let lo = 1 + (p.n - p.width) / 2;
            LatticeSet::from_points(d, q.points().filter(|x| (lo..lo + p.width).contains(&x.coords()[0])))
        }
        "sphere-shell" => {
            if !(p.radius >= 0.5) {
                return Err(invalid("radius", "must be at least 0.5"));
            }
            let c = match &p.centre {
                Some(c) if c.dim() != d => return Err(Error::DimensionMismatch { expected: d, got: c.dim() }),
                Some(c) => c.clone(),
                None => Point::splat(d, (p.n + 1) / 2),
            };
            let r = (p.radius + 0.5).ceil() as i64;
            let bx = LatticeBox::cube(c.sub(&Point::splat(d, r)), 2 * r + 1);
            let (lo, hi) = (p.radius - 0.5, p.radius + 0.5);
            LatticeSet::from_points(d, bx.points().filter(|x| {
                let r = x.dist(&c);
                lo <= r && r <= hi
            }))
        }
        "rw-trace" => {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let mut x = Point::origin(d);
            let mut pts = vec![x.clone()];
            for _ in 0..p.steps {
                let e: usize = rng.gen_range(0..2 * d);
                x = x.offset(e / 2, if e % 2 == 0 { 1 } else { -1 });
                pts.push(x.clone());
            }
            let set = LatticeSet::from_points(d, pts)?;
            let lo = set.bbox().expect("nonempty trace").lo.clone();
            Ok(set.translate(&Point::splat(d, 1).sub(&lo)))
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: i64, d: usize) -> FamilyParams {
        FamilyParams { n, d, ..FamilyParams::default() }
    }

    #[test]
    fn odd_lattice_count() {
        let a = family("odd-lattice", &params(4, 2)).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.contains(&Point::new(&[3, 1])));
        assert_eq!(family("odd-lattice", &params(8, 3)).unwrap().len(), 64);
    }

    #[test]
    fn trace_without_steps_is_a_point() {
        let p = FamilyParams { steps: 0, ..params(4, 3) };
        assert_eq!(family("rw-trace", &p).unwrap().points(), &[Point::splat(3, 1)]);
        let p = FamilyParams { steps: 500, seed: 9, ..params(4, 2) };
        assert_eq!(family("rw-trace", &p).unwrap(), family("rw-trace", &p).unwrap());
    }

    #[test]
    fn shell_matches_scan() {
        let c = Point::new(&[5, 5]);
        let p = FamilyParams { radius: 3.0, centre: Some(c.clone()), ..params(10, 2) };
        let a = family("sphere-shell", &p).unwrap();
        let scan: Vec<Point> = LatticeBox::cube(Point::splat(2, -10), 30)
            .points()
            .filter(|x| (2.5..=3.5).contains(&x.dist(&c)))
            .collect();
        assert_eq!(a.points(), &scan[..]);
    }

    #[test]
    fn cube_and_slab() {
        assert_eq!(family("full-cube", &params(3, 3)).unwrap().len(), 27);
        let s = family("slab", &FamilyParams { width: 2, ..params(6, 2) }).unwrap();
        assert_eq!(s.len(), 12);
        assert!(s.iter().all(|x| x.coords()[0] == 3 || x.coords()[0] == 4));
        assert!(matches!(family("spiral", &params(3, 2)), Err(Error::UnknownFamily(_))));
    }
}
