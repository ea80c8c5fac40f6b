//! Raw matrix-multiply loops over row-major slices.
//!
//! All variants accumulate into `out`. Rows of the output are independent, so
//! large products are split across threads by output row; each row is still
//! summed in a fixed order, which keeps results bit-identical regardless of
//! the thread count.

use rayon::prelude::*;

/// Work (in multiply-adds) below which a product stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// `out[m,n] += a[m,k] · b[k,n]`
pub(crate) fn mm_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let row = |(i, out_row): (usize, &mut [f64])| {
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    };
    if m * k * n >= PARALLEL_THRESHOLD && m > 1 {
        out[..m * n].par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out[..m * n].chunks_mut(n).enumerate().for_each(row);
    }
}

/// `out[m,k] += a[m,n] · b[k,n]ᵀ`
pub(crate) fn mm_bt_acc(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let row = |(i, out_row): (usize, &mut [f64])| {
        let a_row = &a[i * n..(i + 1) * n];
        for (p, o) in out_row.iter_mut().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            let mut acc = 0.0;
            for (&x, &y) in a_row.iter().zip(b_row) {
                acc += x * y;
            }
            *o += acc;
        }
    };
    if m * k * n >= PARALLEL_THRESHOLD && m > 1 {
        out[..m * k].par_chunks_mut(k).enumerate().for_each(row);
    } else {
        out[..m * k].chunks_mut(k).enumerate().for_each(row);
    }
}

/// `out[k,n] += a[m,k]ᵀ · b[m,n]`
pub(crate) fn mm_at_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let row = |(p, out_row): (usize, &mut [f64])| {
        for i in 0..m {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let b_row = &b[i * n..(i + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    };
    if m * k * n >= PARALLEL_THRESHOLD && k > 1 {
        out[..k * n].par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out[..k * n].chunks_mut(n).enumerate().for_each(row);
    }
}
