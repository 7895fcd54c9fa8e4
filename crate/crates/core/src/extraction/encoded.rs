use crate::matrix::CsrMatrix;

/// Anything with a per-row sorted column pattern.
pub trait RowPattern {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    fn row_cols(&self, i: usize) -> &[usize];
}

impl RowPattern for CsrMatrix {
    fn num_rows(&self) -> usize {
        CsrMatrix::num_rows(self)
    }

    fn num_cols(&self) -> usize {
        CsrMatrix::num_cols(self)
    }

    fn row_cols(&self, i: usize) -> &[usize] {
        self.row(i).0
    }
}

/// Level-`l` aggregation matrix.
///
/// Every nonzero is a dense column of height `2^l`; row `i` stands for the
/// ordered tuple of original rows `row_map[i * h..(i + 1) * h]`. Tuples of
/// different rows may share an original row, but then their column sets
/// are disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    level: u32,
    num_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    payload: Vec<f64>,
    row_map: Vec<usize>,
}

impl EncodedMatrix {
    pub(crate) fn from_parts(
        level: u32,
        num_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        payload: Vec<f64>,
        row_map: Vec<usize>,
    ) -> Self {
        let h = 1usize << level;
        debug_assert_eq!(payload.len(), col_idx.len() * h);
        debug_assert_eq!(row_map.len(), (row_ptr.len() - 1) * h);
        debug_assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        Self { level, num_cols, row_ptr, col_idx, payload, row_map }
    }

    /// Level-0 view of a CSR matrix.
    pub fn from_csr(a: &CsrMatrix) -> Self {
        Self {
            level: 0,
            num_cols: a.num_cols(),
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
            payload: a.values().to_vec(),
            row_map: (0..a.num_rows()).collect(),
        }
    }

    pub fn empty(level: u32, num_cols: usize) -> Self {
        Self {
            level,
            num_cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            payload: Vec::new(),
            row_map: Vec::new(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Payload height `2^level`.
    pub fn height(&self) -> usize {
        1 << self.level
    }

    pub fn num_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Number of original-matrix elements held, `nnz * 2^level`.
    pub fn element_count(&self) -> usize {
        self.payload.len()
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_range(i)]
    }

    /// Payload columns of row `i`, `height()` scalars per nonzero.
    pub fn row_payload(&self, i: usize) -> &[f64] {
        let h = self.height();
        let r = self.row_range(i);
        &self.payload[r.start * h..r.end * h]
    }

    /// Payload of the nonzero at storage position `pos`.
    pub fn payload_at(&self, pos: usize) -> &[f64] {
        let h = self.height();
        &self.payload[pos * h..(pos + 1) * h]
    }

    pub fn row_tuple(&self, i: usize) -> &[usize] {
        let h = self.height();
        &self.row_map[i * h..(i + 1) * h]
    }

    /// Copy keeping only the nonzeros whose position is not flagged in
    /// `removed`.
    pub(crate) fn without(&self, removed: &[bool]) -> Self {
        let h = self.height();
        let mut row_ptr = Vec::with_capacity(self.row_ptr.len());
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut payload = Vec::with_capacity(self.payload.len());
        row_ptr.push(0);
        for i in 0..self.num_rows() {
            for pos in self.row_range(i) {
                if !removed[pos] {
                    col_idx.push(self.col_idx[pos]);
                    payload.extend_from_slice(&self.payload[pos * h..(pos + 1) * h]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            level: self.level,
            num_cols: self.num_cols,
            row_ptr,
            col_idx,
            payload,
            row_map: self.row_map.clone(),
        }
    }
}

impl RowPattern for EncodedMatrix {
    fn num_rows(&self) -> usize {
        EncodedMatrix::num_rows(self)
    }

    fn num_cols(&self) -> usize {
        self.num_cols
    }

    fn row_cols(&self, i: usize) -> &[usize] {
        EncodedMatrix::row_cols(self, i)
    }
}
