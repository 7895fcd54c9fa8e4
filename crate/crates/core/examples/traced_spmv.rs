//! Run the warp emulation with an access trace and check coalescing.

use blockspmv::executor::{check_coalescing, spmv_ec_traced, ArrayId};
use blockspmv::verify::relative_error;
use blockspmv::{build, generate_uniform, spmv_oracle, DeltaBits, ExtractionConfig, PipelineConfig};

fn main() -> blockspmv::Result<()> {
    let a = generate_uniform(64, 96, 0.5, 5)?;
    let cfg = PipelineConfig { extraction: ExtractionConfig::new(4, 2, DeltaBits::B4)?, ..Default::default() };
    let ec = build(&a, &cfg)?;
    let x: Vec<f32> = (0..96).map(|j| (j % 7) as f32 - 3.0).collect();

    let (y, trace) = spmv_ec_traced(&ec, &x)?;
    for r in trace.records.iter().filter(|r| r.warp == 0 && r.array != ArrayId::X) {
        println!("{r}");
    }
    let report = check_coalescing(&ec, &trace);
    println!("warps={} steps={} violations={}", report.warps, report.steps, report.violations.len());
    println!("relative error vs CSR: {:e}", relative_error(&a, &x, &y, &spmv_oracle(&a, &x)?));
    Ok(())
}
