//! Byte accounting against CSR and dense storage for several delta widths.

use blockspmv::executor::access_cost;
use blockspmv::format::storage_report;
use blockspmv::{build, generate_uniform, prepare_blocks, DeltaBits, ExtractionConfig, PipelineConfig, Precision};

fn main() -> blockspmv::Result<()> {
    let a = generate_uniform(2048, 2048, 0.7, 1)?;
    for bits in [DeltaBits::B4, DeltaBits::B8, DeltaBits::B16] {
        let cfg = PipelineConfig {
            extraction: ExtractionConfig::new(32, 4, bits)?,
            clip_threshold: None,
            precision: Precision::F16,
        };
        let r = storage_report(&build(&a, &cfg)?, 16, 32);
        let cost = access_cost(&prepare_blocks(&a, &cfg)?, &cfg.extraction, 1.0);
        println!(
            "B={:>2}: {:>9} bytes, {:.3} of CSR-32, padding {:5.2}%, x loads {:.0} of {:.0}",
            bits.bits(),
            r.ec_csr_bytes,
            r.ratio_to_csr32(),
            100.0 * r.padding_overhead,
            cost.cost,
            cost.unblocked
        );
    }
    Ok(())
}
