//! Block-set storage with per-lane base indices and narrow delta indices.
//!
//! Every block set becomes five arrays: `row_indices` (g per block),
//! `block_indptr` (stored-column offsets), `base_indices` (one absolute
//! column per lane), `delta_indices` (one B-bit gap per stored column) and
//! `block_values` (g scalars per stored column). Deltas and values are
//! interleaved so that each warp step reads one contiguous chunk of
//! `warp_size * vector_size` columns.

mod compress;
mod container;
mod report;

pub use compress::{compress_indices, decompress_indices, permute_layout, unpermute_layout, LaneIndices};
pub use container::{deserialize, read_ecsr, serialize, write_ecsr, MAGIC, VERSION};
pub use report::{delta_histogram, storage_report, CostReport, DeltaHistogram, SetBytes};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{BlockSet, DeltaBits, ExtractionConfig};
use crate::matrix::CsrMatrix;

/// Value width used by the storage accounting. Computation always runs in
/// `f32` or `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    F16,
    F32,
    F64,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::F16 => 16,
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            16 => Ok(Precision::F16),
            32 => Ok(Precision::F32),
            64 => Ok(Precision::F64),
            b => Err(Error::Config(format!("value precision must be 16, 32 or 64 bits, got {b}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetDesc {
    pub granularity: u32,
    pub vector_size: u32,
    pub num_blocks: u32,
    /// Stored columns including padding, equal to the last `block_indptr`.
    pub stored_cols: u32,
    /// Source nonzeros held by the set (no padding, no inserted zeros).
    pub nnz: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcCsrSet {
    pub desc: SetDesc,
    pub row_indices: Vec<u32>,
    pub block_indptr: Vec<u32>,
    pub base_indices: Vec<u32>,
    pub delta_indices: Vec<u16>,
    pub block_values: Vec<f64>,
}

impl EcCsrSet {
    pub fn granularity(&self) -> usize {
        self.desc.granularity as usize
    }

    pub fn vector_size(&self) -> usize {
        self.desc.vector_size as usize
    }

    pub fn num_blocks(&self) -> usize {
        self.desc.num_blocks as usize
    }

    /// Stored-column range of block `b`.
    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.block_indptr[b] as usize..self.block_indptr[b + 1] as usize
    }

    pub fn block_rows(&self, b: usize) -> &[u32] {
        let g = self.granularity();
        &self.row_indices[b * g..(b + 1) * g]
    }

    pub fn block_bases(&self, b: usize, warp_size: usize) -> &[u32] {
        &self.base_indices[b * warp_size..(b + 1) * warp_size]
    }

    /// Stored value slots that are padding or inserted zeros.
    pub fn padded_elements(&self) -> u64 {
        self.block_values.len() as u64 - self.desc.nnz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcCsrMatrix {
    pub num_rows: usize,
    pub num_cols: usize,
    pub precision: Precision,
    pub delta_bits: DeltaBits,
    pub warp_size: usize,
    pub sets: Vec<EcCsrSet>,
}

impl EcCsrMatrix {
    pub fn nnz(&self) -> u64 {
        self.sets.iter().map(|s| s.desc.nnz).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.sets.iter().map(EcCsrSet::num_blocks).sum()
    }

    /// Checks every structural invariant, including that each decoded
    /// column index is in range.
    pub fn validate(&self) -> Result<()> {
        let w = self.warp_size;
        if w == 0 {
            return Err(Error::Malformed("warp size is 0".into()));
        }
        if self.num_rows > u32::MAX as usize || self.num_cols > u32::MAX as usize {
            return Err(Error::Malformed("dimensions exceed 32 bits".into()));
        }
        let max_delta = self.delta_bits.max_delta();
        for (si, s) in self.sets.iter().enumerate() {
            let bad = |msg: String| Error::Malformed(format!("set {si}: {msg}"));
            let (g, v, nb) = (s.granularity(), s.vector_size(), s.num_blocks());
            if g == 0 || v == 0 {
                return Err(bad("granularity and vector size must be positive".into()));
            }
            if s.block_indptr.len() != nb + 1 || s.block_indptr[0] != 0 {
                return Err(bad(format!("block_indptr must have {} entries starting at 0", nb + 1)));
            }
            if s.row_indices.len() != nb * g {
                return Err(bad(format!("row_indices has {} entries, expected {}", s.row_indices.len(), nb * g)));
            }
            if s.base_indices.len() != nb * w {
                return Err(bad(format!("base_indices has {} entries, expected {}", s.base_indices.len(), nb * w)));
            }
            let stored = s.block_indptr[nb] as usize;
            if stored != s.delta_indices.len() || stored != s.desc.stored_cols as usize {
                return Err(bad("stored column count disagrees with delta_indices".into()));
            }
            if s.block_values.len() != stored * g {
                return Err(bad("block_values length is not granularity * stored columns".into()));
            }
            if s.desc.nnz > s.block_values.len() as u64 {
                return Err(bad("nnz exceeds stored elements".into()));
            }
            if let Some(r) = s.row_indices.iter().find(|&&r| r as usize >= self.num_rows) {
                return Err(bad(format!("row index {r} out of range")));
            }
            if let Some(d) = s.delta_indices.iter().find(|&&d| d as usize > max_delta) {
                return Err(bad(format!("delta {d} exceeds {} bits", self.delta_bits.bits())));
            }
            for b in 0..nb {
                let (lo, hi) = (s.block_indptr[b] as usize, s.block_indptr[b + 1] as usize);
                if hi < lo {
                    return Err(bad(format!("block_indptr decreases at block {b}")));
                }
                if (hi - lo) % (w * v) != 0 {
                    return Err(bad(format!("block {b} has {} columns, not a multiple of {}", hi - lo, w * v)));
                }
                let seg = (hi - lo) / w;
                for t in 0..w {
                    let base = s.base_indices[b * w + t] as usize;
                    let mut cur = base;
                    for i in 0..seg / v {
                        for j in 0..v {
                            cur += s.delta_indices[lo + (i * w + t) * v + j] as usize;
                            if cur >= self.num_cols {
                                return Err(bad(format!("block {b} lane {t} decodes column {cur} >= {}", self.num_cols)));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Cuts every 1-grained block into a long part of whole
/// `warp_size * vector_size` chunks and a short remainder stored with
/// vector size 1. Empty parts are dropped.
pub fn split_one_grained(set: &BlockSet, cfg: &ExtractionConfig) -> Result<(BlockSet, BlockSet)> {
    if set.granularity != 1 {
        return Err(Error::Config(format!(
            "only 1-grained sets are split, got granularity {}",
            set.granularity
        )));
    }
    let width = cfg.chunk_width();
    let mut long = BlockSet::new(1, cfg.vector_size);
    let mut short = BlockSet::new(1, 1);
    for b in &set.blocks {
        let cut = b.nnc() / width * width;
        if cut > 0 {
            long.blocks.push(b.slice(0..cut));
        }
        if cut < b.nnc() {
            short.blocks.push(b.slice(cut..b.nnc()));
        }
    }
    Ok((long, short))
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::DimensionOverflow(format!("{what} {v} exceeds 32 bits")))
}

/// Lays out block sets in the order given. Each block is padded to a
/// multiple of `warp_size * set.vector_size` stored columns.
pub fn encode_ec_csr(
    num_rows: usize,
    num_cols: usize,
    sets: &[BlockSet],
    cfg: &ExtractionConfig,
    precision: Precision,
) -> Result<EcCsrMatrix> {
    cfg.validate()?;
    to_u32(num_rows, "row count")?;
    to_u32(num_cols, "column count")?;
    let w = cfg.warp_size;
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        let g = set.granularity;
        let v = set.vector_size.max(1);
        let mut es = EcCsrSet {
            desc: SetDesc {
                granularity: to_u32(g, "granularity")?,
                vector_size: to_u32(v, "vector size")?,
                num_blocks: 0,
                stored_cols: 0,
                nnz: 0,
            },
            row_indices: Vec::new(),
            block_indptr: vec![0],
            base_indices: Vec::new(),
            delta_indices: Vec::new(),
            block_values: Vec::new(),
        };
        for b in &set.blocks {
            if b.nnc() == 0 {
                continue;
            }
            if b.granularity() != g {
                return Err(Error::Config(format!(
                    "block with {} rows in a {g}-grained set",
                    b.granularity()
                )));
            }
            if let Some(&c) = b.col_ids.last() {
                if c >= num_cols {
                    return Err(Error::InvalidMatrix(format!("column {c} out of range")));
                }
            }
            let stored = b.nnc().div_ceil(w * v) * w * v;
            let lanes = compress_indices(&b.col_ids, stored, w, cfg.delta_bits)?;
            let mut values = b.values.clone();
            values.resize(stored * g, 0.0);

            es.base_indices.extend_from_slice(&lanes.bases);
            es.delta_indices.extend(permute_layout(&lanes.deltas, 1, w, v));
            es.block_values.extend(permute_layout(&values, g, w, v));
            for &r in &b.row_ids {
                if r >= num_rows {
                    return Err(Error::InvalidRow { row: r, num_rows });
                }
                es.row_indices.push(r as u32);
            }
            es.block_indptr.push(to_u32(es.delta_indices.len(), "block offset")?);
            es.desc.nnz += (b.real_nnc() * g) as u64;
        }
        es.desc.num_blocks = to_u32(es.block_indptr.len() - 1, "block count")?;
        es.desc.stored_cols = *es.block_indptr.last().unwrap();
        out.push(es);
    }
    Ok(EcCsrMatrix {
        num_rows,
        num_cols,
        precision,
        delta_bits: cfg.delta_bits,
        warp_size: w,
        sets: out,
    })
}

/// Scatters every stored element back into a CSR matrix.
///
/// Zero-valued slots (alignment padding, inserted gap zeros) are dropped,
/// so explicit zeros of the source do not survive the round trip.
pub fn decode_ec_csr(ec: &EcCsrMatrix) -> Result<CsrMatrix> {
    ec.validate()?;
    let w = ec.warp_size;
    let mut triplets = Vec::with_capacity(ec.nnz() as usize);
    for s in &ec.sets {
        let (g, v) = (s.granularity(), s.vector_size());
        for b in 0..s.num_blocks() {
            let range = s.block_range(b);
            let deltas = unpermute_layout(&s.delta_indices[range.clone()], 1, w, v);
            let values = unpermute_layout(&s.block_values[range.start * g..range.end * g], g, w, v);
            let lanes = LaneIndices { bases: s.block_bases(b, w).to_vec(), deltas };
            let cols = decompress_indices(&lanes);
            let rows = s.block_rows(b);
            for (k, &c) in cols.iter().enumerate() {
                for (r, &row) in rows.iter().enumerate() {
                    let val = values[k * g + r];
                    if val != 0.0 {
                        triplets.push((row as usize, c, val));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(ec.num_rows, ec.num_cols, triplets).map_err(|e| match e {
        Error::DuplicateEntry { row, col } => {
            Error::Malformed(format!("nonzero ({row}, {col}) stored more than once"))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::Block;

    fn block(rows: &[usize], cols: &[usize]) -> Block {
        let g = rows.len();
        Block {
            row_ids: rows.to_vec(),
            col_ids: cols.to_vec(),
            values: (0..g * cols.len()).map(|v| v as f64 + 1.0).collect(),
            fill: Vec::new(),
        }
    }

    fn cfg(w: usize, v: usize) -> ExtractionConfig {
        ExtractionConfig::new(w, v, DeltaBits::B8).unwrap()
    }

    #[test]
    fn split_five_into_four_and_one() {
        let set = BlockSet { granularity: 1, vector_size: 2, blocks: vec![block(&[0], &[0, 1, 3, 4, 6])] };
        let (long, short) = split_one_grained(&set, &cfg(2, 2)).unwrap();
        assert_eq!(long.blocks[0].col_ids, vec![0, 1, 3, 4]);
        assert_eq!(long.vector_size, 2);
        assert_eq!(short.blocks[0].col_ids, vec![6]);
        assert_eq!(short.vector_size, 1);

        let ec = encode_ec_csr(1, 8, &[long, short], &cfg(2, 2), Precision::F32).unwrap();
        assert_eq!(ec.sets[1].block_indptr, vec![0, 2]);
        assert_eq!(ec.sets[1].base_indices, vec![6, 0]);
        assert_eq!(ec.sets[1].delta_indices, vec![0, 0]);
        assert_eq!(ec.sets[1].block_values, vec![5.0, 0.0]);
        assert_eq!(ec.sets[1].padded_elements(), 1);
    }

    #[test]
    fn split_exact_chunk_has_no_short_part() {
        let set = BlockSet { granularity: 1, vector_size: 2, blocks: vec![block(&[0], &[0, 1, 2, 3])] };
        let (long, short) = split_one_grained(&set, &cfg(2, 2)).unwrap();
        assert_eq!(long.len(), 1);
        assert!(short.is_empty());
        let two = BlockSet { granularity: 2, vector_size: 2, blocks: vec![] };
        assert!(split_one_grained(&two, &cfg(2, 2)).is_err());
    }

    /// Three block sets with W = 2 and V = 2.
    #[test]
    fn three_set_layout() {
        let c = cfg(2, 2);
        let g4 = BlockSet { granularity: 4, vector_size: 2, blocks: vec![block(&[0, 1, 2, 3], &[0, 1, 7, 8])] };
        let g2 = BlockSet {
            granularity: 2,
            vector_size: 2,
            blocks: vec![block(&[4, 5], &[2, 4, 5, 6]), block(&[6, 7], &[1, 3, 5, 7])],
        };
        let g1 = BlockSet { granularity: 1, vector_size: 2, blocks: vec![block(&[8], &[0, 2, 3, 5, 8])] };
        let (long, short) = split_one_grained(&g1, &c).unwrap();
        let ec = encode_ec_csr(9, 9, &[g4, g2, long, short], &c, Precision::F32).unwrap();
        let s = &ec.sets[1];
        assert_eq!(s.base_indices, vec![2, 5, 1, 5]);
        assert_eq!(s.delta_indices, vec![0, 2, 0, 1, 0, 2, 0, 2]);
        assert_eq!(s.block_indptr, vec![0, 4, 8]);
        assert_eq!(s.row_indices, vec![4, 5, 6, 7]);
        // first block: lane 0 owns columns 2, 4; lane 1 owns 5, 6
        assert_eq!(&s.block_values[..8], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(ec.sets[3].block_indptr, vec![0, 2]);
        assert_eq!(ec.nnz(), 16 + 16 + 5);
        ec.validate().unwrap();
    }

    #[test]
    fn values_are_interleaved_by_chunk() {
        let c = cfg(2, 1);
        let set = BlockSet { granularity: 2, vector_size: 1, blocks: vec![block(&[0, 1], &[0, 1, 2, 3])] };
        let ec = encode_ec_csr(2, 4, &[set], &c, Precision::F64).unwrap();
        // lane 0 holds columns 0, 1 and lane 1 holds 2, 3
        assert_eq!(ec.sets[0].block_values, vec![1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0]);
        assert_eq!(ec.sets[0].delta_indices, vec![0, 0, 1, 1]);
    }

    #[test]
    fn empty_set_list() {
        let ec = encode_ec_csr(3, 3, &[], &ExtractionConfig::default(), Precision::F32).unwrap();
        assert!(ec.sets.is_empty());
        assert_eq!(decode_ec_csr(&ec).unwrap(), CsrMatrix::zeros(3, 3));
    }

    #[test]
    fn decode_round_trip_identity() {
        let a = CsrMatrix::identity(5);
        let blocks = (0..5).map(|i| Block { row_ids: vec![i], col_ids: vec![i], values: vec![1.0], fill: vec![] });
        let set = BlockSet { granularity: 1, vector_size: 1, blocks: blocks.collect() };
        let ec = encode_ec_csr(5, 5, &[set], &cfg(4, 1), Precision::F32).unwrap();
        assert_eq!(decode_ec_csr(&ec).unwrap(), a);
    }

    #[test]
    fn encode_rejects_overflowing_gap() {
        let set = BlockSet { granularity: 1, vector_size: 1, blocks: vec![block(&[0], &[0, 300])] };
        assert!(matches!(
            encode_ec_csr(1, 400, &[set], &cfg(1, 1), Precision::F32),
            Err(Error::DeltaOverflow { .. })
        ));
    }

    #[test]
    fn validate_catches_corruption() {
        let set = BlockSet { granularity: 2, vector_size: 2, blocks: vec![block(&[0, 1], &[2, 4, 5, 6])] };
        let ec = encode_ec_csr(2, 7, &[set], &cfg(2, 2), Precision::F32).unwrap();
        let mut bad = ec.clone();
        bad.sets[0].base_indices[1] = 6;
        assert!(bad.validate().is_err());
        let mut bad = ec.clone();
        bad.sets[0].block_indptr[1] = 3;
        assert!(bad.validate().is_err());
        let mut bad = ec;
        bad.sets[0].row_indices[0] = 2;
        assert!(decode_ec_csr(&bad).is_err());
    }
}
