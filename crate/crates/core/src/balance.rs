//! Block clipping and reordering for even per-warp work.

use crate::extraction::{BlockSet, ExtractionConfig};

/// Clipping threshold for a set: twice the mean block width rounded up to
/// a multiple of `warp_size * vector_size`, and never below one chunk.
pub fn clip_threshold(set: &BlockSet, cfg: &ExtractionConfig) -> usize {
    let width = cfg.chunk_width();
    if set.blocks.is_empty() {
        return width;
    }
    let total: usize = set.blocks.iter().map(|b| b.nnc()).sum();
    // ceil(2 * total / n) rounded up to the chunk width
    let twice_mean = (2 * total).div_ceil(set.blocks.len());
    twice_mean.div_ceil(width).max(1) * width
}

/// Splits every block wider than the threshold into consecutive chunks of
/// at most `T` columns. `threshold` overrides the mean-derived value; it is
/// rounded up to a multiple of `warp_size * vector_size`.
pub fn clip_blocks(set: &BlockSet, cfg: &ExtractionConfig, threshold: Option<usize>) -> BlockSet {
    let width = cfg.chunk_width();
    let t = match threshold {
        Some(t) => t.div_ceil(width).max(1) * width,
        None => clip_threshold(set, cfg),
    };
    let mut out = BlockSet::new(set.granularity, set.vector_size);
    for b in &set.blocks {
        if b.nnc() <= t {
            out.blocks.push(b.clone());
            continue;
        }
        let mut start = 0;
        while start < b.nnc() {
            let end = (start + t).min(b.nnc());
            out.blocks.push(b.slice(start..end));
            start = end;
        }
    }
    out
}

/// Sorts blocks by stored element count (descending, stable) within each
/// set, then sets by granularity (descending, stable).
pub fn reorder(sets: Vec<BlockSet>) -> Vec<BlockSet> {
    let mut sets: Vec<BlockSet> = sets
        .into_iter()
        .map(|mut s| {
            s.blocks.sort_by_key(|b| std::cmp::Reverse(b.nnz()));
            s
        })
        .collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.granularity));
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{Block, DeltaBits};
    use proptest::prelude::*;

    fn block(id: usize, g: usize, nnc: usize) -> Block {
        Block {
            row_ids: (0..g).map(|r| id * g + r).collect(),
            col_ids: (0..nnc).collect(),
            values: (0..g * nnc).map(|v| v as f64 + 1.0).collect(),
            fill: Vec::new(),
        }
    }

    fn set_of(g: usize, widths: &[usize]) -> BlockSet {
        BlockSet {
            granularity: g,
            vector_size: 4,
            blocks: widths.iter().enumerate().map(|(i, &w)| block(i, g, w)).collect(),
        }
    }

    fn cfg(w: usize, v: usize) -> ExtractionConfig {
        ExtractionConfig::new(w, v, DeltaBits::B8).unwrap()
    }

    #[test]
    fn equal_blocks_unchanged() {
        let s = set_of(2, &[128, 128, 128]);
        assert_eq!(clip_blocks(&s, &cfg(32, 4), None), s);
    }

    #[test]
    fn long_block_split_into_threshold_chunks() {
        // mean = (1024 + 8 * 16) / 9 = 128, so T = 256
        let mut widths = vec![1024];
        widths.extend([16; 8]);
        let s = set_of(1, &widths);
        let c = cfg(32, 4);
        assert_eq!(clip_threshold(&s, &c), 256);
        let out = clip_blocks(&s, &c, None);
        let chunks: Vec<usize> = out.blocks.iter().take(4).map(|b| b.nnc()).collect();
        assert_eq!(chunks, vec![256; 4]);
        assert_eq!(out.blocks.len(), 12);
        let joined: Vec<usize> = out.blocks[..4].iter().flat_map(|b| b.col_ids.clone()).collect();
        assert_eq!(joined, s.blocks[0].col_ids);
        assert!(out.blocks[..4].iter().all(|b| b.row_ids == s.blocks[0].row_ids));
    }

    #[test]
    fn override_threshold_rounds_to_chunk() {
        let s = set_of(1, &[40]);
        let out = clip_blocks(&s, &cfg(4, 2), Some(10));
        assert_eq!(out.blocks.iter().map(|b| b.nnc()).collect::<Vec<_>>(), vec![16, 16, 8]);
    }

    #[test]
    fn reorder_sorts_blocks_and_sets() {
        let sets = vec![set_of(1, &[4, 16, 8]), set_of(4, &[1]), set_of(2, &[3, 3])];
        let out = reorder(sets);
        assert_eq!(out.iter().map(|s| s.granularity).collect::<Vec<_>>(), vec![4, 2, 1]);
        assert_eq!(out[2].blocks.iter().map(|b| b.nnc()).collect::<Vec<_>>(), vec![16, 8, 4]);
    }

    #[test]
    fn reorder_is_stable() {
        let out = reorder(vec![set_of(1, &[5, 9, 5, 5])]);
        let firsts: Vec<usize> = out[0].blocks.iter().map(|b| b.row_ids[0]).collect();
        assert_eq!(firsts, vec![1, 0, 2, 3]);
    }

    proptest! {
        // Bound on the pre-clip mean: max <= T < 2 * mean + W*V.
        #[test]
        fn clipped_width_bounded(widths in proptest::collection::vec(1usize..3000, 1..40), w in 1usize..9, v in 1usize..5) {
            let s = set_of(1, &widths);
            let c = cfg(w, v);
            let mean = widths.iter().sum::<usize>() as f64 / widths.len() as f64;
            let t = clip_threshold(&s, &c);
            let out = clip_blocks(&s, &c, None);
            let max = out.blocks.iter().map(|b| b.nnc()).max().unwrap();
            prop_assert!(max <= t);
            prop_assert!(max as f64 / mean <= 2.0 + (w * v) as f64 / mean + 1e-12);
            prop_assert_eq!(out.blocks.iter().map(|b| b.nnc()).sum::<usize>(), widths.iter().sum::<usize>());
        }
    }
}
