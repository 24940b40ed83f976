//! Geometric multigrid V-cycle used as a preconditioner for the guard-box CG.
//!
//! Coarse grids keep every other fine vertex; prolongation is multilinear
//! interpolation and restriction its transpose. Absorbing cells are carried to
//! a coarse vertex only when they sit exactly on it. The cycle uses the same
//! damped Jacobi sweep before and after the coarse correction, so it is a
//! symmetric positive operator and CG stays valid.

use super::grid::{Grid, ABSORB, EXIT, FREE};
use super::stencil::apply_rows;

const SWEEPS: usize = 2;
const COARSEST_SWEEPS: usize = 40;

struct Level {
    dim: usize,
    /// interior sides
    n: Vec<usize>,
    strides: Vec<usize>,
    state: Vec<u8>,
    mask: Vec<f64>,
    omega: f64,
}

impl Level {
    fn len(&self) -> usize {
        self.state.len()
    }

    fn residual(&self, x: &[f64], b: &[f64], out: &mut [f64]) {
        apply_rows(&self.n, &self.strides, &self.mask, x, Some(b), out);
    }

    fn jacobi(&self, x: &mut [f64], b: &[f64], scratch: &mut [f64]) {
        self.residual(x, b, scratch);
        for i in 0..self.len() {
            x[i] += self.omega * scratch[i];
        }
    }

    fn coarsen(&self) -> Option<Level> {
        let m: Vec<usize> = self.n.iter().map(|&n| n / 2).collect();
        if m.iter().any(|&v| v < 2) {
            return None;
        }
        let ext: Vec<usize> = m.iter().map(|v| v + 2).collect();
        let mut strides = vec![1usize; self.dim];
        for a in (0..self.dim - 1).rev() {
            strides[a] = strides[a + 1] * ext[a + 1];
        }
        let len = strides[0] * ext[0];
        let mut state = vec![EXIT; len];
        let mut c = vec![1usize; self.dim];
        loop {
            let ci: usize = c.iter().zip(&strides).map(|(a, s)| a * s).sum();
            let fi: usize = c.iter().zip(&self.strides).map(|(a, s)| 2 * a * s).sum();
            state[ci] = if self.state[fi] == FREE { FREE } else { ABSORB };
            if !odometer(&mut c, &m) {
                break;
            }
        }
        let mask = state.iter().map(|&s| if s == FREE { 1.0 } else { 0.0 }).collect();
        Some(Level { dim: self.dim, n: m, strides, state, mask, omega: self.omega })
    }
}

/// Advances interior coordinates `1..=n_a` in row-major order.
fn odometer(c: &mut [usize], n: &[usize]) -> bool {
    for a in (0..c.len()).rev() {
        if c[a] < n[a] {
            c[a] += 1;
            return true;
        }
        c[a] = 1;
    }
    false
}

fn extents(n: &[usize]) -> Vec<usize> {
    n.iter().map(|v| v + 2).collect()
}

/// Splits a row-major array with padded extents `ext` around `axis` into
/// (outer count, inner block length).
fn blocks(ext: &[usize], axis: usize) -> (usize, usize) {
    (ext[..axis].iter().product(), ext[axis + 1..].iter().product())
}

/// Linear interpolation along `axis` from `m + 2` to `n + 2` padded points.
fn interpolate_axis(src: &[f64], ext: &[usize], axis: usize, n: usize) -> (Vec<f64>, Vec<usize>) {
    let (outer, inner) = blocks(ext, axis);
    let (se, de) = (ext[axis], n + 2);
    let mut dst = vec![0.0; outer * de * inner];
    if inner == 1 {
        for o in 0..outer {
            let (src, dst) = (&src[o * se..(o + 1) * se], &mut dst[o * de..(o + 1) * de]);
            for f in 1..=n {
                dst[f] = if f % 2 == 0 { src[f / 2] } else { 0.5 * (src[(f - 1) / 2] + src[(f + 1) / 2]) };
            }
        }
        let mut out_ext = ext.to_vec();
        out_ext[axis] = de;
        return (dst, out_ext);
    }
    for o in 0..outer {
        let s0 = o * se * inner;
        let d0 = o * de * inner;
        for f in 1..=n {
            let row = &mut dst[d0 + f * inner..d0 + (f + 1) * inner];
            if f % 2 == 0 {
                row.copy_from_slice(&src[s0 + (f / 2) * inner..s0 + (f / 2 + 1) * inner]);
            } else {
                let (c0, c1) = ((f - 1) / 2, (f + 1) / 2);
                let r0 = &src[s0 + c0 * inner..s0 + (c0 + 1) * inner];
                let r1 = &src[s0 + c1 * inner..s0 + (c1 + 1) * inner];
                for k in 0..inner {
                    row[k] = 0.5 * (r0[k] + r1[k]);
                }
            }
        }
    }
    let mut out_ext = ext.to_vec();
    out_ext[axis] = de;
    (dst, out_ext)
}

/// Transpose of [`interpolate_axis`].
fn restrict_axis(src: &[f64], ext: &[usize], axis: usize, m: usize) -> (Vec<f64>, Vec<usize>) {
    let (outer, inner) = blocks(ext, axis);
    let (se, de) = (ext[axis], m + 2);
    let n = se - 2;
    let mut dst = vec![0.0; outer * de * inner];
    if inner == 1 {
        for o in 0..outer {
            let (src, dst) = (&src[o * se..(o + 1) * se], &mut dst[o * de..(o + 1) * de]);
            for f in 1..=n {
                if f % 2 == 0 {
                    dst[f / 2] += src[f];
                } else {
                    dst[(f - 1) / 2] += 0.5 * src[f];
                    if (f + 1) / 2 < de {
                        dst[(f + 1) / 2] += 0.5 * src[f];
                    }
                }
            }
        }
        let mut out_ext = ext.to_vec();
        out_ext[axis] = de;
        return (dst, out_ext);
    }
    for o in 0..outer {
        let s0 = o * se * inner;
        let d0 = o * de * inner;
        for f in 1..=n {
            let row = &src[s0 + f * inner..s0 + (f + 1) * inner];
            let targets: [(usize, f64); 2] =
                if f % 2 == 0 { [(f / 2, 1.0), (0, 0.0)] } else { [((f - 1) / 2, 0.5), ((f + 1) / 2, 0.5)] };
            for &(c, w) in &targets {
                if w == 0.0 || c >= de {
                    continue;
                }
                let drow = &mut dst[d0 + c * inner..d0 + (c + 1) * inner];
                for k in 0..inner {
                    drow[k] += w * row[k];
                }
            }
        }
    }
    let mut out_ext = ext.to_vec();
    out_ext[axis] = de;
    (dst, out_ext)
}

fn prolong(fine: &Level, coarse: &Level, ec: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = ec.iter().zip(&coarse.state).map(|(&e, &s)| if s == FREE { e } else { 0.0 }).collect();
    let mut ext = extents(&coarse.n);
    // the axis passes commute; the strided last axis goes on the small array
    for a in (0..fine.dim).rev() {
        let (nv, ne) = interpolate_axis(&v, &ext, a, fine.n[a]);
        v = nv;
        ext = ne;
    }
    for (x, &s) in v.iter_mut().zip(&fine.state) {
        if s != FREE {
            *x = 0.0;
        }
    }
    v
}

fn restrict(fine: &Level, coarse: &Level, r: &[f64]) -> Vec<f64> {
    let (mut v, mut ext) = restrict_axis(r, &extents(&fine.n), 0, coarse.n[0]);
    for a in 1..fine.dim {
        let (nv, ne) = restrict_axis(&v, &ext, a, coarse.n[a]);
        v = nv;
        ext = ne;
    }
    for (x, &s) in v.iter_mut().zip(&coarse.state) {
        if s != FREE {
            *x = 0.0;
        }
    }
    v
}

pub(crate) struct Multigrid {
    levels: Vec<Level>,
}

impl Multigrid {
    pub(crate) fn new(grid: &Grid) -> Multigrid {
        let dim = grid.dim();
        let n: Vec<usize> = grid.bounds().sides().iter().map(|&s| s as usize).collect();
        let omega = 2.0 * dim as f64 / (2.0 * dim as f64 + 1.0);
        let mut levels =
            vec![Level {
            dim,
            n,
            strides: grid.offsets.clone(),
            state: grid.state.clone(),
            mask: grid.mask.clone(),
            omega,
        }];
        while levels.last().map(|l| l.len()).unwrap_or(0) > 512 {
            match levels.last().and_then(|l| l.coarsen()) {
                Some(c) => levels.push(c),
                None => break,
            }
        }
        Multigrid { levels }
    }

    pub(crate) fn depth(&self) -> usize {
        self.levels.len()
    }

    /// One V-cycle from a zero initial guess.
    pub(crate) fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(0, r)
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        let lv = &self.levels[l];
        let mut x = vec![0.0; lv.len()];
        let mut scratch = vec![0.0; lv.len()];
        if l + 1 == self.levels.len() {
            for _ in 0..COARSEST_SWEEPS {
                lv.jacobi(&mut x, b, &mut scratch);
            }
            return x;
        }
        // first sweep from zero is a scaled copy
        for i in 0..lv.len() {
            x[i] = lv.omega * lv.mask[i] * b[i];
        }
        for _ in 1..SWEEPS {
            lv.jacobi(&mut x, b, &mut scratch);
        }
        lv.residual(&x, b, &mut scratch);
        let coarse = &self.levels[l + 1];
        let scale = 4.0 / (1u64 << lv.dim) as f64;
        let mut bc = restrict(lv, coarse, &scratch);
        bc.iter_mut().for_each(|v| *v *= scale);
        let ec = self.cycle(l + 1, &bc);
        for (xi, p) in x.iter_mut().zip(prolong(lv, coarse, &ec)) {
            *xi += p;
        }
        for _ in 0..SWEEPS {
            lv.jacobi(&mut x, b, &mut scratch);
        }
        x
    }
}

