//! Build the compressed block container, write it to disk and read it back.

use blockspmv::format::{decode_ec_csr, read_ecsr, write_ecsr};
use blockspmv::{build, generate_uniform, PipelineConfig};

fn main() -> blockspmv::Result<()> {
    let a = generate_uniform(500, 500, 0.8, 3)?;
    let ec = build(&a, &PipelineConfig::default())?;
    let path = std::env::temp_dir().join("blockspmv-example.ecsr");
    write_ecsr(&ec, &path)?;
    let back = read_ecsr(&path)?;
    assert_eq!(back, ec);
    assert_eq!(decode_ec_csr(&back)?, a);
    for s in &back.sets {
        println!("g={} v={} blocks={} stored_cols={} nnz={}", s.desc.granularity, s.desc.vector_size, s.desc.num_blocks, s.desc.stored_cols, s.desc.nnz);
    }
    println!("{} bytes at {}", std::fs::metadata(&path)?.len(), path.display());
    std::fs::remove_file(path)?;
    Ok(())
}
