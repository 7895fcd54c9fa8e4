//! Greedy row matching.
//!
//! Rows are popped in ascending order; each popped row is paired with the
//! still-unselected row sharing the most columns (ties go to the smaller
//! row index). A row whose best partner shares fewer than `min_shared`
//! columns is dropped without a pair.

use rayon::prelude::*;

use super::encoded::RowPattern;

// Below this many words of bitset work per popped row the scan stays serial.
const PAR_WORDS: usize = 1 << 15;

struct Candidates<'a, P: RowPattern> {
    pattern: &'a P,
    /// Original row index per candidate position (ascending).
    rows: Vec<usize>,
    words: usize,
    bits: Vec<u64>,
    /// Candidate positions holding each column, ascending.
    col_rows: Vec<Vec<u32>>,
}

impl<'a, P: RowPattern + Sync> Candidates<'a, P> {
    fn new(pattern: &'a P, min_shared: usize) -> Self {
        let rows: Vec<usize> = (0..pattern.num_rows())
            .filter(|&i| {
                let n = pattern.row_cols(i).len();
                n > 0 && n >= min_shared
            })
            .collect();
        let k = pattern.num_cols();
        let words = k.div_ceil(64);
        let mut bits = vec![0u64; rows.len() * words];
        let mut col_rows = vec![Vec::new(); k];
        for (p, &r) in rows.iter().enumerate() {
            let row_bits = &mut bits[p * words..(p + 1) * words];
            for &c in pattern.row_cols(r) {
                row_bits[c / 64] |= 1u64 << (c % 64);
                col_rows[c].push(p as u32);
            }
        }
        Self { pattern, rows, words, bits, col_rows }
    }

    fn row_bits(&self, p: usize) -> &[u64] {
        &self.bits[p * self.words..(p + 1) * self.words]
    }

    fn overlap_bits(&self, p: usize, q: usize) -> usize {
        self.row_bits(p)
            .iter()
            .zip(self.row_bits(q))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Best partner for `p` among unselected positions after `p`, scanning
    /// bitsets. Returns `(overlap, position)`.
    fn best_dense(&self, p: usize, selected: &[bool], remaining: usize) -> Option<(usize, usize)> {
        let pick = |a: (usize, usize), b: (usize, usize)| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let range = p + 1..self.rows.len();
        let best = if remaining * self.words >= PAR_WORDS {
            range
                .into_par_iter()
                .filter(|&q| !selected[q])
                .map(|q| (self.overlap_bits(p, q), q))
                .reduce_with(pick)
        } else {
            range
                .filter(|&q| !selected[q])
                .map(|q| (self.overlap_bits(p, q), q))
                .reduce(pick)
        };
        best.filter(|&(n, _)| n > 0)
    }

    /// Same result as `best_dense`, counting through the column lists.
    fn best_sparse(
        &self,
        p: usize,
        selected: &[bool],
        counts: &mut [u32],
        touched: &mut Vec<usize>,
    ) -> Option<(usize, usize)> {
        for &c in self.pattern.row_cols(self.rows[p]) {
            let list = &self.col_rows[c];
            let start = list.partition_point(|&q| (q as usize) <= p);
            for &q in &list[start..] {
                let q = q as usize;
                if selected[q] {
                    continue;
                }
                if counts[q] == 0 {
                    touched.push(q);
                }
                counts[q] += 1;
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for &q in touched.iter() {
            let n = counts[q] as usize;
            best = match best {
                Some((bn, bq)) if bn > n || (bn == n && bq < q) => Some((bn, bq)),
                _ => Some((n, q)),
            };
            counts[q] = 0;
        }
        touched.clear();
        best
    }

    fn sparse_cost(&self, p: usize) -> usize {
        self.pattern
            .row_cols(self.rows[p])
            .iter()
            .map(|&c| self.col_rows[c].len())
            .sum()
    }
}

/// Greedy matching of rows by shared-column count.
///
/// Returns `(a, b)` pairs with `a < b`, in the order they were formed.
/// Empty rows and rows with fewer than `min_shared` nonzeros never take
/// part. The result is a valid matching: no row appears twice.
pub fn row_matching<P: RowPattern + Sync>(pattern: &P, min_shared: usize) -> Vec<(usize, usize)> {
    let min_shared = min_shared.max(1);
    let cand = Candidates::new(pattern, min_shared);
    let n = cand.rows.len();
    let mut selected = vec![false; n];
    let mut remaining = n;
    let mut counts = vec![0u32; n];
    let mut touched = Vec::new();
    let mut pairs = Vec::new();

    for p in 0..n {
        if selected[p] {
            continue;
        }
        selected[p] = true;
        remaining -= 1;
        if remaining == 0 {
            break;
        }
        let best = if cand.sparse_cost(p) <= remaining * cand.words {
            cand.best_sparse(p, &selected, &mut counts, &mut touched)
        } else {
            cand.best_dense(p, &selected, remaining)
        };
        if let Some((overlap, q)) = best {
            if overlap >= min_shared {
                selected[q] = true;
                remaining -= 1;
                pairs.push((cand.rows[p], cand.rows[q]));
            }
        }
    }
    pairs
}
