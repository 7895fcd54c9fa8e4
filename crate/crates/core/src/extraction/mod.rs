//! Hierarchical block extraction.
//!
//! Each level pairs similar rows, pulls their shared columns out as 2-row
//! units over several rounds, and re-encodes those units as the rows of
//! the next level's matrix. Whatever a level cannot pair is decoded into
//! the block set of that level's granularity.

mod encoded;
mod hierarchy;
mod matching;

pub use encoded::{EncodedMatrix, RowPattern};
pub use hierarchy::{
    decode_residual, encode_units, extract_blocks_round, hierarchical_extract, multi_round_extract,
    ExtractedUnit,
};
pub use matching::row_matching;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of a stored delta index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeltaBits {
    B4,
    B8,
    B16,
}

impl DeltaBits {
    pub fn bits(self) -> u32 {
        match self {
            DeltaBits::B4 => 4,
            DeltaBits::B8 => 8,
            DeltaBits::B16 => 16,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            4 => Ok(DeltaBits::B4),
            8 => Ok(DeltaBits::B8),
            16 => Ok(DeltaBits::B16),
            b => Err(Error::Config(format!("delta bits must be 4, 8 or 16, got {b}"))),
        }
    }

    /// Largest representable gap, `2^B - 1`.
    pub fn max_delta(self) -> usize {
        (1usize << self.bits()) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub warp_size: usize,
    pub vector_size: usize,
    pub delta_bits: DeltaBits,
    /// Maximum number of granularity levels; `None` runs until a level
    /// extracts nothing.
    pub max_levels: Option<usize>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { warp_size: 32, vector_size: 4, delta_bits: DeltaBits::B8, max_levels: None }
    }
}

impl ExtractionConfig {
    pub fn new(warp_size: usize, vector_size: usize, delta_bits: DeltaBits) -> Result<Self> {
        let cfg = Self { warp_size, vector_size, delta_bits, max_levels: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_levels(mut self, max_levels: Option<usize>) -> Self {
        self.max_levels = max_levels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.warp_size == 0 || self.vector_size == 0 {
            return Err(Error::Config("warp_size and vector_size must be at least 1".into()));
        }
        if self.warp_size > u32::MAX as usize || self.vector_size > u32::MAX as usize {
            return Err(Error::Config("warp_size and vector_size must fit in 32 bits".into()));
        }
        if self.max_levels == Some(0) {
            return Err(Error::Config("max_levels must be at least 1".into()));
        }
        Ok(())
    }

    /// Minimum useful block width: one vector per lane.
    pub fn chunk_width(&self) -> usize {
        self.warp_size * self.vector_size
    }

    pub fn max_delta(&self) -> usize {
        self.delta_bits.max_delta()
    }
}

/// A g-grained block: `g` rows sharing `nnc` column indices.
///
/// `values` is column-major: the `g` scalars of column `k` live at
/// `values[k * g..(k + 1) * g]`, ordered like `row_ids`. `fill` lists the
/// positions (into `col_ids`) of zero columns inserted to keep gaps
/// representable; they are not part of the source matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
    pub values: Vec<f64>,
    pub fill: Vec<usize>,
}

impl Block {
    pub fn granularity(&self) -> usize {
        self.row_ids.len()
    }

    /// Stored columns, including inserted zero columns.
    pub fn nnc(&self) -> usize {
        self.col_ids.len()
    }

    /// Columns that hold source nonzeros.
    pub fn real_nnc(&self) -> usize {
        self.col_ids.len() - self.fill.len()
    }

    /// Stored elements, `g * nnc`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_fill(&self, k: usize) -> bool {
        self.fill.binary_search(&k).is_ok()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let g = self.granularity();
        &self.values[k * g..(k + 1) * g]
    }

    /// Largest gap between consecutive stored columns (0 for nnc < 2).
    pub fn max_gap(&self) -> usize {
        self.col_ids.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Every stored element as `(row, col, value, is_fill)`.
    pub fn elements(&self) -> impl Iterator<Item = (usize, usize, f64, bool)> + '_ {
        let g = self.granularity();
        self.col_ids.iter().enumerate().flat_map(move |(k, &c)| {
            let fill = self.is_fill(k);
            self.row_ids
                .iter()
                .enumerate()
                .map(move |(r, &row)| (row, c, self.values[k * g + r], fill))
        })
    }

    /// Columns `range` of this block as a new block with the same rows.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Block {
        let g = self.granularity();
        let fill = self
            .fill
            .iter()
            .filter(|&&k| range.contains(&k))
            .map(|&k| k - range.start)
            .collect();
        Block {
            row_ids: self.row_ids.clone(),
            col_ids: self.col_ids[range.clone()].to_vec(),
            values: self.values[range.start * g..range.end * g].to_vec(),
            fill,
        }
    }
}

/// Blocks of one granularity, plus the vector width they are stored with.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSet {
    pub granularity: usize,
    pub vector_size: usize,
    pub blocks: Vec<Block>,
}

impl BlockSet {
    pub fn new(granularity: usize, vector_size: usize) -> Self {
        Self { granularity, vector_size, blocks: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Source nonzeros covered by this set.
    pub fn real_nnz(&self) -> usize {
        self.blocks.iter().map(|b| b.real_nnc() * b.granularity()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_bits_range() {
        assert_eq!(DeltaBits::B4.max_delta(), 15);
        assert_eq!(DeltaBits::B8.max_delta(), 255);
        assert_eq!(DeltaBits::B16.max_delta(), 65535);
        assert!(DeltaBits::from_bits(5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExtractionConfig::new(0, 4, DeltaBits::B8).is_err());
        assert!(ExtractionConfig::new(32, 0, DeltaBits::B8).is_err());
        let cfg = ExtractionConfig::default();
        assert_eq!(cfg.chunk_width(), 128);
        assert!(cfg.with_max_levels(Some(0)).validate().is_err());
    }

    #[test]
    fn slice_reindexes_fill() {
        let b = Block {
            row_ids: vec![3, 7],
            col_ids: vec![0, 1, 2, 3],
            values: vec![1.0, 2.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0],
            fill: vec![1, 3],
        };
        let s = b.slice(1..3);
        assert_eq!(s.col_ids, vec![1, 2]);
        assert_eq!(s.values, vec![0.0, 0.0, 3.0, 4.0]);
        assert_eq!(s.fill, vec![0]);
        assert_eq!(b.real_nnc(), 2);
        assert_eq!(b.column(2), &[3.0, 4.0]);
    }
}
