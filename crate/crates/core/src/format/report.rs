//! Storage accounting and gap statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::EcCsrMatrix;
use crate::matrix::CsrMatrix;

/// Bytes of the fixed container header.
pub const HEADER_BYTES: u64 = 23;
/// Bytes of one serialized set descriptor.
pub const SET_DESC_BYTES: u64 = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetBytes {
    pub granularity: usize,
    pub vector_size: usize,
    pub num_blocks: usize,
    pub set_desc: u64,
    pub row_indices: u64,
    pub block_indptr: u64,
    pub base_indices: u64,
    pub delta_indices: u64,
    pub block_values: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub num_rows: usize,
    pub num_cols: usize,
    pub nnz: u64,
    pub value_bits: u32,
    pub delta_bits: u32,
    pub warp_size: usize,
    pub sets: Vec<SetBytes>,
    pub header_bytes: u64,
    pub ec_csr_bytes: u64,
    /// CSR with absolute indices at the requested baseline width.
    pub csr_baseline_index_bits: u32,
    pub csr_baseline_bytes: u64,
    pub csr32_bytes: u64,
    pub csr16_bytes: u64,
    pub dense_bytes: u64,
    pub stored_elements: u64,
    /// Padding and inserted zeros relative to the real nonzeros.
    pub padding_overhead: f64,
    /// Input-vector loads, one per stored block column of real data (L = 1).
    pub access_cost: f64,
}

impl CostReport {
    pub fn ratio_to_csr32(&self) -> f64 {
        self.ec_csr_bytes as f64 / self.csr32_bytes as f64
    }

    pub fn ratio_to_dense(&self) -> f64 {
        self.ec_csr_bytes as f64 / self.dense_bytes as f64
    }

    /// Line-oriented `key=value` rendering.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("rows", self.num_rows.to_string());
        kv("cols", self.num_cols.to_string());
        kv("nnz", self.nnz.to_string());
        kv("value_bits", self.value_bits.to_string());
        kv("delta_bits", self.delta_bits.to_string());
        kv("warp_size", self.warp_size.to_string());
        for (i, set) in self.sets.iter().enumerate() {
            let p = format!("set{i}");
            kv(&format!("{p}.granularity"), set.granularity.to_string());
            kv(&format!("{p}.vector_size"), set.vector_size.to_string());
            kv(&format!("{p}.num_blocks"), set.num_blocks.to_string());
            kv(&format!("{p}.set_desc_bytes"), set.set_desc.to_string());
            kv(&format!("{p}.row_indices_bytes"), set.row_indices.to_string());
            kv(&format!("{p}.block_indptr_bytes"), set.block_indptr.to_string());
            kv(&format!("{p}.base_indices_bytes"), set.base_indices.to_string());
            kv(&format!("{p}.delta_indices_bytes"), set.delta_indices.to_string());
            kv(&format!("{p}.block_values_bytes"), set.block_values.to_string());
            kv(&format!("{p}.total_bytes"), set.total.to_string());
        }
        kv("header_bytes", self.header_bytes.to_string());
        kv("ec_csr_bytes", self.ec_csr_bytes.to_string());
        kv("csr_baseline_index_bits", self.csr_baseline_index_bits.to_string());
        kv("csr_baseline_bytes", self.csr_baseline_bytes.to_string());
        kv("csr32_bytes", self.csr32_bytes.to_string());
        kv("csr16_bytes", self.csr16_bytes.to_string());
        kv("dense_bytes", self.dense_bytes.to_string());
        kv("ratio_to_csr32", format!("{:.6}", self.ratio_to_csr32()));
        kv("ratio_to_dense", format!("{:.6}", self.ratio_to_dense()));
        kv("stored_elements", self.stored_elements.to_string());
        kv("padding_overhead", format!("{:.6}", self.padding_overhead));
        kv("access_cost", format!("{}", self.access_cost));
        s
    }
}

fn csr_bytes(num_rows: usize, nnz: u64, value_bits: u32, index_bits: u32) -> u64 {
    (nnz * (value_bits + index_bits) as u64).div_ceil(8) + (num_rows as u64 + 1) * 4
}

/// Byte accounting for `ec` with values counted at `value_bits`, against
/// CSR (absolute indices of `index_bits_baseline` bits, 32-bit row
/// pointers) and dense storage.
pub fn storage_report(ec: &EcCsrMatrix, value_bits: u32, index_bits_baseline: u32) -> CostReport {
    let b = ec.delta_bits.bits() as u64;
    let w = ec.warp_size as u64;
    let mut sets = Vec::with_capacity(ec.sets.len());
    let mut stored_elements = 0u64;
    let mut access_cost = 0.0;
    for s in &ec.sets {
        let g = s.granularity() as u64;
        let nb = s.num_blocks() as u64;
        let cols = s.desc.stored_cols as u64;
        let row_indices = g * nb * 4;
        let block_indptr = (nb + 1) * 4;
        let base_indices = w * nb * 4;
        let delta_indices = (cols * b).div_ceil(8);
        let block_values = (cols * g * value_bits as u64).div_ceil(8);
        let total = SET_DESC_BYTES + row_indices + block_indptr + base_indices + delta_indices + block_values;
        stored_elements += cols * g;
        access_cost += s.desc.nnz as f64 / g as f64;
        sets.push(SetBytes {
            granularity: g as usize,
            vector_size: s.vector_size(),
            num_blocks: nb as usize,
            set_desc: SET_DESC_BYTES,
            row_indices,
            block_indptr,
            base_indices,
            delta_indices,
            block_values,
            total,
        });
    }
    let nnz = ec.nnz();
    let ec_csr_bytes = HEADER_BYTES + sets.iter().map(|s| s.total).sum::<u64>();
    CostReport {
        num_rows: ec.num_rows,
        num_cols: ec.num_cols,
        nnz,
        value_bits,
        delta_bits: ec.delta_bits.bits(),
        warp_size: ec.warp_size,
        sets,
        header_bytes: HEADER_BYTES,
        ec_csr_bytes,
        csr_baseline_index_bits: index_bits_baseline,
        csr_baseline_bytes: csr_bytes(ec.num_rows, nnz, value_bits, index_bits_baseline),
        csr32_bytes: csr_bytes(ec.num_rows, nnz, value_bits, 32),
        csr16_bytes: csr_bytes(ec.num_rows, nnz, value_bits, 16),
        dense_bytes: (ec.num_rows as u64 * ec.num_cols as u64 * value_bits as u64).div_ceil(8),
        stored_elements,
        padding_overhead: if nnz == 0 { 0.0 } else { (stored_elements - nnz) as f64 / nnz as f64 },
        access_cost,
    }
}

/// Distribution of gaps between adjacent nonzeros of the same row.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DeltaHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
}

impl DeltaHistogram {
    /// Fraction of gaps `<= gap`.
    pub fn fraction_at_most(&self, gap: usize) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        let n: u64 = self.counts.range(..=gap).map(|(_, c)| c).sum();
        n as f64 / self.total as f64
    }

    /// `(gap, cumulative fraction)` for every observed gap, ascending.
    pub fn cdf(&self) -> Vec<(usize, f64)> {
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|(&g, &c)| {
                acc += c;
                (g, acc as f64 / self.total as f64)
            })
            .collect()
    }

    pub fn max_gap(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}

pub fn delta_histogram(a: &CsrMatrix) -> DeltaHistogram {
    let mut h = DeltaHistogram::default();
    for i in 0..a.num_rows() {
        for w in a.row(i).0.windows(2) {
            *h.counts.entry(w[1] - w[0]).or_insert(0) += 1;
            h.total += 1;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{Block, BlockSet, DeltaBits, ExtractionConfig};
    use crate::format::{encode_ec_csr, Precision};
    use crate::matrix::generate_uniform;

    #[test]
    fn dense_rows_have_unit_gaps() {
        let h = delta_histogram(&generate_uniform(5, 20, 0.0, 1).unwrap());
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.counts[&1], 5 * 19);
        assert_eq!(h.fraction_at_most(1), 1.0);
        assert_eq!(h.cdf(), vec![(1, 1.0)]);
    }

    #[test]
    fn tiny_dense_matrix_is_not_smaller_than_dense() {
        let set = BlockSet {
            granularity: 1,
            vector_size: 1,
            blocks: (0..2)
                .map(|i| Block { row_ids: vec![i], col_ids: vec![0, 1], values: vec![1.0, 2.0], fill: vec![] })
                .collect(),
        };
        let cfg = ExtractionConfig::new(1, 1, DeltaBits::B8).unwrap();
        let ec = encode_ec_csr(2, 2, &[set], &cfg, Precision::F32).unwrap();
        let r = storage_report(&ec, 32, 32);
        assert!(r.ec_csr_bytes >= r.dense_bytes);
        assert_eq!(r.dense_bytes, 16);
        assert_eq!(r.ec_csr_bytes, r.header_bytes + r.sets.iter().map(|s| s.total).sum::<u64>());
    }

    // Closed form: one 2-grained block of 64 columns (W = 8, V = 2, so no
    // padding), 16-bit values and 8-bit deltas.
    #[test]
    fn closed_form_bit_accounting() {
        let cols: Vec<usize> = (0..64).map(|k| 3 * k).collect();
        let set = BlockSet {
            granularity: 2,
            vector_size: 2,
            blocks: vec![Block { row_ids: vec![0, 1], col_ids: cols, values: vec![1.0; 128], fill: vec![] }],
        };
        let cfg = ExtractionConfig::new(8, 2, DeltaBits::B8).unwrap();
        let ec = encode_ec_csr(2, 200, &[set], &cfg, Precision::F16).unwrap();
        let r = storage_report(&ec, 16, 32);
        let s = &r.sets[0];
        assert_eq!(s.block_values, 128 * 2);
        assert_eq!(s.delta_indices, 64);
        assert_eq!(s.base_indices, 8 * 4);
        assert_eq!(s.row_indices, 2 * 4);
        assert_eq!(s.block_indptr, 2 * 4);
        assert_eq!(s.total, 24 + 256 + 64 + 32 + 8 + 8);
        // index bits per nonzero: 8-bit delta shared by 2 rows plus amortized bases
        let index_bits = ((s.delta_indices + s.base_indices) * 8) as f64 / 128.0;
        assert!((index_bits - 6.0).abs() < 1e-12);
        assert_eq!(r.csr32_bytes, 128 * 6 + 3 * 4);
        assert_eq!(r.csr16_bytes, 128 * 4 + 3 * 4);
        assert_eq!(r.padding_overhead, 0.0);
        assert_eq!(r.access_cost, 64.0);
        assert!(r.to_key_value().contains("set0.delta_indices_bytes=64\n"));
    }
}
