//! Distribution of column gaps within rows at several sparsities.

use blockspmv::format::delta_histogram;
use blockspmv::generate_uniform;

fn main() -> blockspmv::Result<()> {
    for sparsity in [0.5, 0.7, 0.8, 0.9] {
        let h = delta_histogram(&generate_uniform(1024, 4096, sparsity, 11)?);
        let p99 = h.cdf().into_iter().find(|&(_, f)| f >= 0.99).map_or(0, |(g, _)| g);
        println!(
            "sparsity {sparsity}: <=15 {:.4}  <=32 {:.4}  <=128 {:.4}  99th pct {p99}  max {}",
            h.fraction_at_most(15),
            h.fraction_at_most(32),
            h.fraction_at_most(128),
            h.max_gap()
        );
    }
    Ok(())
}
