//! CPU emulation of the block SpMV kernel.
//!
//! One warp handles one block. Lane `t` walks its segment of the block one
//! chunk at a time: it adds each delta to a running column index, loads
//! `x` at that column once and multiplies it into `g` per-lane
//! accumulators. Lanes are then folded by a fixed binary tree and lane 0
//! adds the `g` sums into `y`. Blocks run in container order, so the
//! canonical mode is bit-reproducible.

mod cost;
mod trace;

pub use cost::{access_cost, AccessCost};
pub use trace::{check_coalescing, AccessRecord, AccessTrace, ArrayId, CoalescingReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{EcCsrMatrix, EcCsrSet};
use crate::matrix::Real;

trait Sink {
    fn record(&mut self, rec: AccessRecord);
}

struct NoTrace;

impl Sink for NoTrace {
    #[inline(always)]
    fn record(&mut self, _: AccessRecord) {}
}

impl Sink for AccessTrace {
    fn record(&mut self, rec: AccessRecord) {
        self.records.push(rec);
    }
}

/// Runs one warp over block `b` of `set` and returns the `g` row sums.
fn run_block<T: Real, S: Sink>(
    set: &EcCsrSet,
    set_id: usize,
    b: usize,
    warp: usize,
    warp_size: usize,
    x: &[T],
    sink: &mut S,
) -> Vec<T> {
    let g = set.granularity();
    let v = set.vector_size();
    let load = warp_size * v;
    let range = set.block_range(b);
    let steps = (range.end - range.start) / load;
    let bases = set.block_bases(b, warp_size);

    let mut index: Vec<usize> = bases.iter().map(|&c| c as usize).collect();
    let mut acc = vec![T::zero(); warp_size * g];

    // The kernel double-buffers chunk i + 1 while computing chunk i; only
    // the chunk order matters here.
    for step in 0..steps {
        let chunk = range.start + step * load;
        sink.record(AccessRecord { set: set_id, warp, step, array: ArrayId::Deltas, start: chunk, len: load });
        sink.record(AccessRecord {
            set: set_id,
            warp,
            step,
            array: ArrayId::Values,
            start: chunk * g,
            len: load * g,
        });
        for lane in 0..warp_size {
            let lane_acc = &mut acc[lane * g..(lane + 1) * g];
            for j in 0..v {
                let p = chunk + lane * v + j;
                index[lane] += set.delta_indices[p] as usize;
                let col = index[lane];
                sink.record(AccessRecord { set: set_id, warp, step, array: ArrayId::X, start: col, len: 1 });
                let xv = x[col];
                let vals = &set.block_values[p * g..(p + 1) * g];
                for (a, &val) in lane_acc.iter_mut().zip(vals) {
                    *a += T::from_f64(val).unwrap() * xv;
                }
            }
        }
    }

    warp_reduce(&mut acc, warp_size, g);
    acc.truncate(g);
    for &row in set.block_rows(b) {
        sink.record(AccessRecord { set: set_id, warp, step: steps, array: ArrayId::Y, start: row as usize, len: 1 });
    }
    acc
}

/// Folds lane accumulators into lane 0 with a fixed pairwise tree:
/// stride 1, 2, 4, ... lane `t` absorbs lane `t + stride`.
fn warp_reduce<T: Real>(acc: &mut [T], warp_size: usize, g: usize) {
    let mut stride = 1;
    while stride < warp_size {
        let mut t = 0;
        while t + stride < warp_size {
            for k in 0..g {
                let other = acc[(t + stride) * g + k];
                acc[t * g + k] += other;
            }
            t += 2 * stride;
        }
        stride *= 2;
    }
}

fn check_input<T>(ec: &EcCsrMatrix, x: &[T]) -> Result<()> {
    if x.len() != ec.num_cols {
        return Err(Error::DimensionMismatch { expected: ec.num_cols, got: x.len() });
    }
    ec.validate()
}

fn run<T: Real, S: Sink>(ec: &EcCsrMatrix, x: &[T], sink: &mut S) -> Vec<T> {
    let mut y = vec![T::zero(); ec.num_rows];
    let mut warp = 0;
    for (si, set) in ec.sets.iter().enumerate() {
        for b in 0..set.num_blocks() {
            let sums = run_block(set, si, b, warp, ec.warp_size, x, sink);
            for (&row, s) in set.block_rows(b).iter().zip(sums) {
                y[row as usize] += s;
            }
            warp += 1;
        }
    }
    y
}

/// `y = A x` over the stored blocks, in canonical order.
pub fn spmv_ec<T: Real>(ec: &EcCsrMatrix, x: &[T]) -> Result<Vec<T>> {
    check_input(ec, x)?;
    Ok(run(ec, x, &mut NoTrace))
}

/// As [`spmv_ec`], also returning every read and write the warps issue.
pub fn spmv_ec_traced<T: Real>(ec: &EcCsrMatrix, x: &[T]) -> Result<(Vec<T>, AccessTrace)> {
    check_input(ec, x)?;
    let mut trace = AccessTrace::default();
    let y = run(ec, x, &mut trace);
    Ok((y, trace))
}

/// Blocks of each set run concurrently; their sums are then added to `y`
/// in block order on one thread.
pub fn spmv_ec_parallel<T: Real>(ec: &EcCsrMatrix, x: &[T]) -> Result<Vec<T>> {
    check_input(ec, x)?;
    let mut y = vec![T::zero(); ec.num_rows];
    for (si, set) in ec.sets.iter().enumerate() {
        let sums: Vec<Vec<T>> = (0..set.num_blocks())
            .into_par_iter()
            .map(|b| run_block(set, si, b, 0, ec.warp_size, x, &mut NoTrace))
            .collect();
        for (b, s) in sums.into_iter().enumerate() {
            for (&row, v) in set.block_rows(b).iter().zip(s) {
                y[row as usize] += v;
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{Block, BlockSet, DeltaBits, ExtractionConfig};
    use crate::format::{encode_ec_csr, Precision};

    fn cfg(w: usize, v: usize) -> ExtractionConfig {
        ExtractionConfig::new(w, v, DeltaBits::B8).unwrap()
    }

    #[test]
    fn identity_returns_input() {
        let blocks = (0..6).map(|i| Block { row_ids: vec![i], col_ids: vec![i], values: vec![1.0], fill: vec![] });
        let set = BlockSet { granularity: 1, vector_size: 1, blocks: blocks.collect() };
        let ec = encode_ec_csr(6, 6, &[set], &cfg(4, 1), Precision::F64).unwrap();
        let x = vec![0.5, -2.0, 3.25, 7.0, 1e-3, -9.5];
        assert_eq!(spmv_ec(&ec, &x).unwrap(), x);
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        assert_eq!(spmv_ec(&ec, &xf).unwrap(), xf);
    }

    #[test]
    fn two_row_block_with_unit_vector() {
        let set = BlockSet {
            granularity: 2,
            vector_size: 2,
            blocks: vec![Block { row_ids: vec![0, 1], col_ids: vec![2, 4, 5, 6], values: vec![1.0; 8], fill: vec![] }],
        };
        let ec = encode_ec_csr(2, 7, &[set], &cfg(2, 2), Precision::F32).unwrap();
        let mut x = vec![0.0; 7];
        x[4] = 1.0;
        assert_eq!(spmv_ec(&ec, &x).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let ec = encode_ec_csr(2, 7, &[], &cfg(2, 2), Precision::F32).unwrap();
        assert!(matches!(spmv_ec(&ec, &[0.0f64; 6]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reduction_tree_order() {
        // 3 lanes: (l0 + l1) + l2
        let mut acc = vec![1.0f64, 2.0, 4.0];
        warp_reduce(&mut acc, 3, 1);
        assert_eq!(acc[0], 7.0);
        let mut acc: Vec<f64> = (1..=8).map(f64::from).collect();
        warp_reduce(&mut acc, 4, 2);
        assert_eq!(&acc[..2], &[1.0 + 3.0 + 5.0 + 7.0, 2.0 + 4.0 + 6.0 + 8.0]);
    }
}
