//! Compressed sparse row matrices, the dense reference SpMV, and the
//! row-similarity primitive used by block extraction.

use std::cmp::Ordering;

use num_traits::{Float, FromPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Floating point type usable for SpMV computation.
pub trait Real:
    Float + FromPrimitive + std::ops::AddAssign + std::fmt::Debug + std::fmt::LowerExp + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Sparse matrix in CSR layout with 0-based absolute column indices.
///
/// Explicit zeros are allowed and are treated as structural nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    num_rows: usize,
    num_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw arrays, checking every CSR invariant.
    pub fn new(
        num_rows: usize,
        num_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != num_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                num_rows + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(Error::InvalidMatrix("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != values.len() || row_ptr[num_rows] != col_idx.len() {
            return Err(Error::InvalidMatrix(
                "row_ptr[num_rows], col_idx and values lengths disagree".into(),
            ));
        }
        for i in 0..num_rows {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= num_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column {c} out of range in row {i}"
                    )));
                }
            }
        }
        Ok(Self { num_rows, num_cols, row_ptr, col_idx, values })
    }

    /// Builds a matrix from (row, col, value) triplets in any order.
    /// Duplicate coordinates are rejected.
    pub fn from_triplets(
        num_rows: usize,
        num_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; num_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &triplets {
            if r >= num_rows {
                return Err(Error::InvalidRow { row: r, num_rows });
            }
            if c >= num_cols {
                return Err(Error::InvalidMatrix(format!("column {c} out of range")));
            }
            if prev == Some((r, c)) {
                return Err(Error::DuplicateEntry { row: r + 1, col: c + 1 });
            }
            prev = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..num_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { num_rows, num_cols, row_ptr, col_idx, values })
    }

    pub fn zeros(num_rows: usize, num_cols: usize) -> Self {
        Self {
            num_rows,
            num_cols,
            row_ptr: vec![0; num_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            num_rows: n,
            num_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Value at (i, j) if it is a structural nonzero.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).is_ok()
    }

    /// Iterates (row, col, value) in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    /// Row-major dense copy. Intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.num_cols]; self.num_rows];
        for (i, j, v) in self.triplets() {
            dense[i][j] = v;
        }
        dense
    }
}

/// Random matrix where every cell is independently nonzero with
/// probability `1 - sparsity`. Values are uniform in (-1, 1) and never
/// exactly zero, so the pattern survives a value-based round trip.
pub fn generate_uniform(
    num_rows: usize,
    num_cols: usize,
    sparsity: f64,
    seed: u64,
) -> Result<CsrMatrix> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::Config(format!("sparsity {sparsity} is not in [0, 1)")));
    }
    let density = 1.0 - sparsity;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_ptr = Vec::with_capacity(num_rows + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for _ in 0..num_rows {
        for j in 0..num_cols {
            if rng.gen::<f64>() < density {
                let v = loop {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    if v != 0.0 && v != -1.0 {
                        break v;
                    }
                };
                col_idx.push(j);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix { num_rows, num_cols, row_ptr, col_idx, values })
}

/// Reference SpMV: `y[i] = sum_j A[i, j] * x[j]`, accumulated in row order.
pub fn spmv_oracle<T: Real>(a: &CsrMatrix, x: &[T]) -> Result<Vec<T>> {
    if x.len() != a.num_cols() {
        return Err(Error::DimensionMismatch { expected: a.num_cols(), got: x.len() });
    }
    let y = (0..a.num_rows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            let mut acc = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc += T::from_f64(v).unwrap() * x[c];
            }
            acc
        })
        .collect();
    Ok(y)
}

/// Number of structural columns rows `i` and `j` have in common.
pub fn shared_column_count(a: &CsrMatrix, i: usize, j: usize) -> Result<usize> {
    for r in [i, j] {
        if r >= a.num_rows() {
            return Err(Error::InvalidRow { row: r, num_rows: a.num_rows() });
        }
    }
    Ok(intersection_len(a.row(i).0, a.row(j).0))
}

/// Size of the intersection of two strictly increasing sequences.
pub(crate) fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut p, mut q, mut n) = (0, 0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            Ordering::Less => p += 1,
            Ordering::Greater => q += 1,
            Ordering::Equal => {
                n += 1;
                p += 1;
                q += 1;
            }
        }
    }
    n
}
