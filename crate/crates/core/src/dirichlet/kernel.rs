//! Exact first-entrance distributions on the infinite lattice by dense kernel
//! algebra on the outer boundary layer of the target.
//!
//! A walk from outside `A` first enters `A` at a point of `B = boundary(A)`,
//! so it suffices to work on `B`. For d >= 3 the hitting density solves
//! `G_B s = G(x - .)` with `G_B = [G(w - z)]`. For d = 2 the potential kernel
//! replaces `G`, and the harmonic function with boundary values `1_{y}` is
//! `sum_z c_z a(. - z) + c_0` with `sum_z c_z = 0`, which gives the bordered
//! system `[[a_B, 1], [1^T, 0]] s = [a(x - .), 1]`.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSet, Point};
use crate::potential::{PotentialTable, TableMode};

use super::{HittingDistribution, Method};

pub struct KernelSolver {
    table: PotentialTable,
    boundary: Vec<Point>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    target: LatticeSet,
}

impl KernelSolver {
    pub fn new(target: &LatticeSet) -> Result<Self> {
        Self::with_table(target, PotentialTable::new(target.dim())?)
    }

    /// Reuses the kernel values already cached in `table`.
    pub fn with_table(target: &LatticeSet, table: PotentialTable) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::EmptySet);
        }
        if table.dim() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), got: table.dim() });
        }
        let boundary: Vec<Point> = target.boundary()?.points().to_vec();
        let n = boundary.len();
        let diffs: Vec<Point> =
            boundary.iter().flat_map(|w| boundary.iter().map(move |z| w.sub(z))).collect();
        table.populate(diffs.iter())?;
        let bordered = table.mode() == TableMode::PotentialKernel;
        let size = if bordered { n + 1 } else { n };
        let mut m = DMatrix::<f64>::zeros(size, size);
        for (i, w) in boundary.iter().enumerate() {
            for (j, z) in boundary.iter().enumerate().skip(i) {
                let v = table.get(&w.sub(z))?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        if bordered {
            for i in 0..n {
                m[(i, n)] = 1.0;
                m[(n, i)] = 1.0;
            }
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem);
        }
        Ok(KernelSolver { table, boundary, lu, target: target.clone() })
    }

    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn table(&self) -> &PotentialTable {
        &self.table
    }

    fn bordered(&self) -> bool {
        self.table.mode() == TableMode::PotentialKernel
    }

    fn solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        self.lu.solve(&rhs).ok_or(Error::SingularSystem)
    }

    fn distribution(&self, start: Point, s: &DVector<f64>) -> HittingDistribution {
        let mut d = HittingDistribution::new(start, Method::Kernel);
        for (k, y) in self.boundary.iter().enumerate() {
            if s[k] > 0.0 {
                d.density.insert(y.clone(), s[k]);
            }
        }
        d
    }

    /// Density of the first entrance into the target from `x`.
    pub fn hitting(&self, x: &Point) -> Result<HittingDistribution> {
        if x.dim() != self.target.dim() {
            return Err(Error::DimensionMismatch { expected: self.target.dim(), got: x.dim() });
        }
        if self.target.contains(x) {
            return Ok(HittingDistribution::point_mass(x.clone(), Method::Kernel));
        }
        let diffs: Vec<Point> = self.boundary.iter().map(|z| x.sub(z)).collect();
        self.table.populate(diffs.iter())?;
        let n = self.boundary.len();
        let size = if self.bordered() { n + 1 } else { n };
        let mut rhs = DVector::<f64>::zeros(size);
        for (k, dz) in diffs.iter().enumerate() {
            rhs[k] = self.table.get(dz)?;
        }
        if self.bordered() {
            rhs[n] = 1.0;
        }
        let s = self.solve(rhs)?;
        let mut d = self.distribution(x.clone(), &s);
        if !self.bordered() {
            d.escaped_mass = (1.0 - d.hit_mass()).max(0.0);
        }
        d.residual = self.residual(&s, &diffs)?;
        Ok(d)
    }

    /// Harmonic measure from infinity: the normalized equilibrium measure.
    pub fn from_infinity(&self) -> Result<HittingDistribution> {
        let n = self.boundary.len();
        let rhs = if self.bordered() {
            let mut r = DVector::<f64>::zeros(n + 1);
            r[n] = 1.0;
            r
        } else {
            DVector::<f64>::from_element(n, 1.0)
        };
        let mut s = self.solve(rhs)?;
        let total: f64 = (0..n).map(|k| s[k]).sum();
        for k in 0..n {
            s[k] /= total;
        }
        let start = self.target.bbox().expect("nonempty").lo.clone();
        Ok(self.distribution(start, &s))
    }

    /// Capacity in d >= 3: total equilibrium charge, `G_B e = 1`.
    pub fn capacity(&self) -> Result<Option<f64>> {
        if self.bordered() {
            return Ok(None);
        }
        let s = self.solve(DVector::from_element(self.boundary.len(), 1.0))?;
        Ok(Some(s.iter().sum()))
    }

    fn residual(&self, s: &DVector<f64>, diffs: &[Point]) -> Result<f64> {
        let n = self.boundary.len();
        let mut worst = 0.0f64;
        for (i, w) in self.boundary.iter().enumerate() {
            let mut acc = if self.bordered() { s[n] } else { 0.0 };
            for (j, z) in self.boundary.iter().enumerate() {
                acc += self.table.get(&w.sub(z))? * s[j];
            }
            worst = worst.max((acc - self.table.get(&diffs[i])?).abs());
        }
        Ok(worst)
    }
}

/// One-shot [`KernelSolver::hitting`].
pub fn kernel_hitting(target: &LatticeSet, x: &Point) -> Result<HittingDistribution> {
    KernelSolver::new(target)?.hitting(x)
}

/// One-shot [`KernelSolver::from_infinity`].
pub fn kernel_from_infinity(target: &LatticeSet) -> Result<HittingDistribution> {
    KernelSolver::new(target)?.from_infinity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::green;

    fn set(dim: usize, pts: &[&[i64]]) -> LatticeSet {
        LatticeSet::from_points(dim, pts.iter().map(|c| Point::new(c))).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let a = set(2, &[&[0, 0], &[2, 0]]);
        let d = kernel_hitting(&a, &Point::from([1, 0])).unwrap();
        assert!((d.get(&Point::from([0, 0])) - 0.5).abs() < 1e-13);
        assert!((d.hit_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_point_green_ratio() {
        let a = set(3, &[&[0, 0, 0]]);
        let x = Point::from([2, 1, 0]);
        let d = kernel_hitting(&a, &x).unwrap();
        let truth = green(&x).unwrap().value / green(&Point::origin(3)).unwrap().value;
        assert!((d.hit_mass() - truth).abs() < 1e-12);
        let cap = KernelSolver::new(&a).unwrap().capacity().unwrap().unwrap();
        assert!((cap * green(&Point::origin(3)).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neighbour_pair_from_infinity_is_uniform() {
        let a = set(2, &[&[0, 0], &[1, 0]]);
        let d = kernel_from_infinity(&a).unwrap();
        assert!((d.get(&Point::from([0, 0])) - 0.5).abs() < 1e-13);
    }
}
