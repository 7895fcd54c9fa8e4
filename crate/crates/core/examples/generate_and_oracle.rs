//! Generate a seeded random matrix, write it as MatrixMarket and compute
//! a reference product.

use blockspmv::mtx::{read_matrix_market, write_matrix_market};
use blockspmv::{generate_uniform, spmv_oracle};

fn main() -> blockspmv::Result<()> {
    let a = generate_uniform(6, 8, 0.6, 42)?;
    let mut text = Vec::new();
    write_matrix_market(&a, &mut text)?;
    print!("{}", String::from_utf8_lossy(&text));

    let back = read_matrix_market(&text[..])?;
    assert_eq!(back, a);

    let x: Vec<f64> = (0..8).map(|j| j as f64).collect();
    println!("y = {:?}", spmv_oracle(&a, &x)?);
    Ok(())
}
