//! Sparse matrix-vector multiplication over hierarchically extracted row
//! blocks.
//!
//! Rows that share column indices are paired into 2-row blocks, pairs of
//! blocks into 4-row blocks and so on. Each block loads an input-vector
//! element once for all of its rows. Blocks are stored with per-lane base
//! indices and narrow delta indices in a layout a warp reads in contiguous
//! chunks, and a CPU emulation of the warp kernel runs SpMV over it.
//!
//! ```
//! use blockspmv::{build, spmv_ec, spmv_oracle, generate_uniform, PipelineConfig};
//!
//! let a = generate_uniform(64, 64, 0.7, 1).unwrap();
//! let ec = build(&a, &PipelineConfig::default()).unwrap();
//! let x = vec![1.0f64; 64];
//! let y = spmv_ec(&ec, &x).unwrap();
//! let r = spmv_oracle(&a, &x).unwrap();
//! assert!(y.iter().zip(&r).all(|(a, b)| (a - b).abs() < 1e-9));
//! ```

pub mod balance;
pub mod cli;
pub mod error;
pub mod executor;
pub mod extraction;
pub mod format;
pub mod matrix;
pub mod mtx;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
pub use executor::{spmv_ec, spmv_ec_parallel, spmv_ec_traced};
pub use extraction::{hierarchical_extract, Block, BlockSet, DeltaBits, ExtractionConfig};
pub use format::{decode_ec_csr, encode_ec_csr, EcCsrMatrix, Precision};
pub use matrix::{generate_uniform, spmv_oracle, CsrMatrix, Real};
pub use pipeline::{build, prepare_blocks, PipelineConfig};
