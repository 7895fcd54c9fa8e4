//! Extract, balance and encode in one call.

use crate::balance::{clip_blocks, reorder};
use crate::error::Result;
use crate::extraction::{hierarchical_extract, BlockSet, ExtractionConfig};
use crate::format::{encode_ec_csr, split_one_grained, EcCsrMatrix, Precision};
use crate::matrix::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    /// Overrides the per-set clipping threshold.
    pub clip_threshold: Option<usize>,
    pub precision: Precision,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { extraction: ExtractionConfig::default(), clip_threshold: None, precision: Precision::F32 }
    }
}

/// Block sets in storage order: extracted, clipped, 1-grained blocks split
/// into long and short parts, then reordered.
pub fn prepare_blocks(a: &CsrMatrix, cfg: &PipelineConfig) -> Result<Vec<BlockSet>> {
    let ex = &cfg.extraction;
    let mut sets = Vec::new();
    for set in hierarchical_extract(a, ex)? {
        let clipped = clip_blocks(&set, ex, cfg.clip_threshold);
        if clipped.granularity == 1 {
            let (long, short) = split_one_grained(&clipped, ex)?;
            sets.extend([long, short].into_iter().filter(|s| !s.is_empty()));
        } else if !clipped.is_empty() {
            sets.push(clipped);
        }
    }
    Ok(reorder(sets))
}

pub fn build(a: &CsrMatrix, cfg: &PipelineConfig) -> Result<EcCsrMatrix> {
    let sets = prepare_blocks(a, cfg)?;
    encode_ec_csr(a.num_rows(), a.num_cols(), &sets, &cfg.extraction, cfg.precision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::DeltaBits;
    use crate::format::decode_ec_csr;
    use crate::matrix::generate_uniform;

    #[test]
    fn round_trip_and_order() {
        let a = generate_uniform(90, 140, 0.7, 11).unwrap();
        let cfg = PipelineConfig { extraction: ExtractionConfig::new(4, 2, DeltaBits::B4).unwrap(), ..Default::default() };
        let sets = prepare_blocks(&a, &cfg).unwrap();
        assert!(sets.windows(2).all(|w| w[0].granularity >= w[1].granularity));
        let ones: Vec<_> = sets.iter().filter(|s| s.granularity == 1).collect();
        assert!(ones.len() <= 2);
        if ones.len() == 2 {
            assert_eq!((ones[0].vector_size, ones[1].vector_size), (2, 1));
        }
        assert_eq!(decode_ec_csr(&build(&a, &cfg).unwrap()).unwrap(), a);
    }

    #[test]
    fn empty_matrix() {
        let a = CsrMatrix::zeros(5, 5);
        let ec = build(&a, &PipelineConfig::default()).unwrap();
        assert_eq!(ec.sets.len(), 0);
        assert_eq!(decode_ec_csr(&ec).unwrap(), a);
    }
}
