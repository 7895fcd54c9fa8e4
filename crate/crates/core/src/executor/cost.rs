//! Input-vector access cost of a block decomposition.

use serde::Serialize;

use crate::extraction::{BlockSet, ExtractionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccessCost {
    /// `sum over elements of L / g`, i.e. one load per block column.
    pub cost: f64,
    /// `nnz * L`, the cost with every element loaded separately.
    pub unblocked: f64,
    /// Index bytes a warp touches: full-width bases plus B-bit deltas,
    /// before alignment padding.
    pub index_bytes: u64,
}

/// `cost = sum_blocks real_nnc * L`. Inserted zero columns hold no source
/// element and are excluded.
pub fn access_cost(sets: &[BlockSet], cfg: &ExtractionConfig, load_cost: f64) -> AccessCost {
    let mut columns = 0u64;
    let mut nnz = 0u64;
    let mut delta_bits = 0u64;
    let mut blocks = 0u64;
    for set in sets {
        for b in &set.blocks {
            columns += b.real_nnc() as u64;
            nnz += (b.real_nnc() * b.granularity()) as u64;
            delta_bits += (b.nnc() * cfg.delta_bits.bits() as usize) as u64;
            blocks += 1;
        }
    }
    AccessCost {
        cost: columns as f64 * load_cost,
        unblocked: nnz as f64 * load_cost,
        index_bytes: blocks * cfg.warp_size as u64 * 4 + delta_bits.div_ceil(8),
    }
}
