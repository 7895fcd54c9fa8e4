//! Checks shared by the CLI, the integration tests and the examples.

use std::collections::HashMap;

use crate::extraction::BlockSet;
use crate::matrix::{CsrMatrix, Real};

/// `max_i |y_i - r_i| / s_i` with `s_i = sum_j |a_ij x_j|`, the scale of
/// row `i`'s products. Unlike `|r_i|` it does not vanish under
/// cancellation. Rows with `s_i = 0` must match exactly.
pub fn relative_error<T: Real>(a: &CsrMatrix, x: &[T], y: &[T], reference: &[T]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.num_rows() {
        let (cols, vals) = a.row(i);
        let scale: f64 = cols.iter().zip(vals).map(|(&j, &v)| (v * x[j].to_f64().unwrap()).abs()).sum();
        let diff = (y[i].to_f64().unwrap() - reference[i].to_f64().unwrap()).abs();
        let e = if scale > 0.0 {
            diff / scale
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(e);
    }
    worst
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartitionReport {
    /// Source nonzeros not held by any block.
    pub missing: usize,
    /// Source nonzeros held more than once.
    pub duplicated: usize,
    /// Block entries absent from the source or holding a different value.
    pub mismatched: usize,
    /// Inserted zero columns holding a non-zero value.
    pub nonzero_fill: usize,
    pub covered: usize,
}

impl PartitionReport {
    pub fn is_ok(&self) -> bool {
        self.missing == 0 && self.duplicated == 0 && self.mismatched == 0 && self.nonzero_fill == 0
    }
}

/// Checks that the real entries of `sets` cover `a` exactly once with the
/// source values and that every inserted column is zero.
pub fn check_partition(a: &CsrMatrix, sets: &[BlockSet]) -> PartitionReport {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(a.nnz());
    let mut r = PartitionReport::default();
    for set in sets {
        for b in &set.blocks {
            for (row, col, val, fill) in b.elements() {
                if fill {
                    if val != 0.0 {
                        r.nonzero_fill += 1;
                    }
                    continue;
                }
                if a.get(row, col) != Some(val) {
                    r.mismatched += 1;
                }
                *seen.entry((row, col)).or_insert(0) += 1;
            }
        }
    }
    for (i, j, _) in a.triplets() {
        match seen.get(&(i, j)) {
            None => r.missing += 1,
            Some(1) => r.covered += 1,
            Some(_) => r.duplicated += 1,
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{hierarchical_extract, Block, ExtractionConfig};
    use crate::matrix::generate_uniform;

    #[test]
    fn cancellation_uses_row_scale() {
        let a = CsrMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
        let x = [1.0f64, 1.0];
        assert_eq!(relative_error(&a, &x, &[1e-17], &[0.0]), 5e-18);
        let z = CsrMatrix::zeros(1, 2);
        assert_eq!(relative_error(&z, &x, &[0.0], &[0.0]), 0.0);
        assert!(relative_error(&z, &x, &[1.0], &[0.0]).is_infinite());
    }

    #[test]
    fn extraction_partitions() {
        let a = generate_uniform(40, 70, 0.6, 5).unwrap();
        let sets = hierarchical_extract(&a, &ExtractionConfig::new(2, 2, crate::extraction::DeltaBits::B4).unwrap()).unwrap();
        let r = check_partition(&a, &sets);
        assert!(r.is_ok(), "{r:?}");
        assert_eq!(r.covered, a.nnz());
    }

    #[test]
    fn detects_double_cover() {
        let a = CsrMatrix::identity(2);
        let blk = |i| Block { row_ids: vec![i], col_ids: vec![i], values: vec![1.0], fill: vec![] };
        let set = BlockSet { granularity: 1, vector_size: 1, blocks: vec![blk(0), blk(0), blk(1)] };
        let r = check_partition(&a, &[set]);
        assert_eq!((r.duplicated, r.missing), (1, 0));
    }
}
