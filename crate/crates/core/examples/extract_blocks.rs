//! Hierarchical block extraction on a small pattern with structure.

use blockspmv::{hierarchical_extract, CsrMatrix, DeltaBits, ExtractionConfig};

fn main() -> blockspmv::Result<()> {
    let rows: [&[usize]; 8] = [
        &[0, 1, 2, 3, 4, 5, 6, 7, 8],
        &[0, 1, 2, 3, 4, 5, 6, 7],
        &[3, 4, 5, 6],
        &[0, 2, 7, 8],
        &[0, 2, 3, 4, 5, 6, 7, 8],
        &[1, 2, 3, 4],
        &[1, 2, 3, 4],
        &[0, 5],
    ];
    let trip = rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&c| (i, c, (i * 10 + c) as f64)));
    let a = CsrMatrix::from_triplets(8, 9, trip.collect())?;

    let cfg = ExtractionConfig::new(2, 2, DeltaBits::B8)?;
    for set in hierarchical_extract(&a, &cfg)? {
        println!("{}-grained: {} blocks", set.granularity, set.len());
        for b in &set.blocks {
            println!("  rows {:?} cols {:?}", b.row_ids, b.col_ids);
        }
    }
    Ok(())
}
