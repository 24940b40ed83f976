//! Row-oriented kernel for `I - P` on padded grids.

use rayon::prelude::*;

/// Computes, on every interior cell `i`,
/// `out[i] = mask[i] * (rhs[i] - (v[i] - (1/2d) sum_nb v))` when `rhs` is
/// given and `mask[i] * (v[i] - (1/2d) sum_nb v)` otherwise. Padding cells of
/// `out` are left untouched. Work is split by slabs of the first axis, so the
/// result does not depend on the thread count.
pub(crate) fn apply_rows(n: &[usize], strides: &[usize], mask: &[f64], v: &[f64], rhs: Option<&[f64]>, out: &mut [f64]) {
    let dim = n.len();
    let inv = 1.0 / (2 * dim) as f64;
    let slab = strides[0];
    let row_len = n[dim - 1];
    out.par_chunks_mut(slab).enumerate().for_each(|(c0, chunk)| {
        if c0 == 0 || c0 > n[0] {
            return;
        }
        let mut c = vec![1usize; dim];
        c[0] = c0;
        loop {
            let start: usize = c[..dim - 1].iter().zip(strides).map(|(a, s)| a * s).sum::<usize>() + 1;
            let local = start - c0 * slab;
            let o = &mut chunk[local..local + row_len];
            let m = &mask[start..start + row_len];
            let centre = &v[start..start + row_len];
            let left = &v[start - 1..start - 1 + row_len];
            let right = &v[start + 1..start + 1 + row_len];
            for k in 0..row_len {
                o[k] = left[k] + right[k];
            }
            for &s in &strides[..dim - 1] {
                let lo = &v[start - s..start - s + row_len];
                let hi = &v[start + s..start + s + row_len];
                for k in 0..row_len {
                    o[k] += lo[k] + hi[k];
                }
            }
            match rhs {
                Some(b) => {
                    let b = &b[start..start + row_len];
                    for k in 0..row_len {
                        o[k] = m[k] * (b[k] - centre[k] + inv * o[k]);
                    }
                }
                None => {
                    for k in 0..row_len {
                        o[k] = m[k] * (centre[k] - inv * o[k]);
                    }
                }
            }
            // next row: advance the middle axes 1..dim-1
            let mut a = dim - 1;
            loop {
                if a == 1 {
                    return;
                }
                a -= 1;
                if c[a] < n[a] {
                    c[a] += 1;
                    break;
                }
                c[a] = 1;
            }
        }
    });
}
