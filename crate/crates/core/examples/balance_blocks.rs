//! Clip over-long blocks and reorder sets for even per-warp work.

use blockspmv::balance::{clip_blocks, clip_threshold, reorder};
use blockspmv::{generate_uniform, hierarchical_extract, DeltaBits, ExtractionConfig};

fn main() -> blockspmv::Result<()> {
    let a = generate_uniform(256, 1024, 0.6, 7)?;
    let cfg = ExtractionConfig::new(8, 2, DeltaBits::B8)?;
    let mut clipped = Vec::new();
    for set in hierarchical_extract(&a, &cfg)? {
        let widths: Vec<usize> = set.blocks.iter().map(|b| b.nnc()).collect();
        let t = clip_threshold(&set, &cfg);
        let out = clip_blocks(&set, &cfg, None);
        println!(
            "g={} T={t}: {} blocks (max nnc {}) -> {} blocks (max nnc {})",
            set.granularity,
            set.len(),
            widths.iter().max().unwrap_or(&0),
            out.len(),
            out.blocks.iter().map(|b| b.nnc()).max().unwrap_or(0)
        );
        clipped.push(out);
    }
    let order: Vec<usize> = reorder(clipped).iter().map(|s| s.granularity).collect();
    println!("set order: {order:?}");
    Ok(())
}
