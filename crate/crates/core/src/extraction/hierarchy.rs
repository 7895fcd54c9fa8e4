use std::cmp::Ordering;

use super::encoded::EncodedMatrix;
use super::matching::row_matching;
use super::{Block, BlockSet, ExtractionConfig};
use crate::error::Result;
use crate::matrix::CsrMatrix;

/// Two rows of a level-`l` matrix joined over a run of shared columns.
///
/// `payload` holds `2^(l+1)` scalars per column: the first row's column on
/// top of the second's, in the order given by `row_tuple`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedUnit {
    pub row_tuple: Vec<usize>,
    pub col_ids: Vec<usize>,
    pub payload: Vec<f64>,
}

impl ExtractedUnit {
    pub fn height(&self) -> usize {
        self.row_tuple.len()
    }

    pub fn element_count(&self) -> usize {
        self.payload.len()
    }
}

/// Pulls the shared columns of every pair out of `current`.
///
/// Shared columns are cut into runs whose consecutive gaps fit the delta
/// width; each run keeps its longest prefix that is a multiple of
/// `warp_size * vector_size` and becomes one unit. Everything else stays
/// in the returned residual.
pub fn extract_blocks_round(
    current: &EncodedMatrix,
    pairs: &[(usize, usize)],
    cfg: &ExtractionConfig,
) -> (Vec<ExtractedUnit>, EncodedMatrix) {
    let width = cfg.chunk_width();
    let max_gap = cfg.max_delta();
    let mut removed = vec![false; current.nnz()];
    let mut units = Vec::new();

    for &(a, b) in pairs {
        // (column, position in a, position in b)
        let shared = shared_positions(current, a, b);
        let mut start = 0;
        while start < shared.len() {
            let mut end = start + 1;
            while end < shared.len() && shared[end].0 - shared[end - 1].0 <= max_gap {
                end += 1;
            }
            let take = (end - start) / width * width;
            if take > 0 {
                let run = &shared[start..start + take];
                let mut row_tuple = current.row_tuple(a).to_vec();
                row_tuple.extend_from_slice(current.row_tuple(b));
                let mut payload = Vec::with_capacity(take * row_tuple.len());
                let mut col_ids = Vec::with_capacity(take);
                for &(c, pa, pb) in run {
                    col_ids.push(c);
                    payload.extend_from_slice(current.payload_at(pa));
                    payload.extend_from_slice(current.payload_at(pb));
                    removed[pa] = true;
                    removed[pb] = true;
                }
                units.push(ExtractedUnit { row_tuple, col_ids, payload });
            }
            start = end;
        }
    }

    let residual = if units.is_empty() { current.clone() } else { current.without(&removed) };
    (units, residual)
}

fn shared_positions(m: &EncodedMatrix, a: usize, b: usize) -> Vec<(usize, usize, usize)> {
    let (ra, rb) = (m.row_range(a), m.row_range(b));
    let (ca, cb) = (m.row_cols(a), m.row_cols(b));
    let (mut p, mut q) = (0, 0);
    let mut out = Vec::new();
    while p < ca.len() && q < cb.len() {
        match ca[p].cmp(&cb[q]) {
            Ordering::Less => p += 1,
            Ordering::Greater => q += 1,
            Ordering::Equal => {
                out.push((ca[p], ra.start + p, rb.start + q));
                p += 1;
                q += 1;
            }
        }
    }
    out
}

/// Repeats matching and extraction on the residual until a round yields
/// nothing. Returns all units in extraction order and the final residual.
pub fn multi_round_extract(
    input: &EncodedMatrix,
    cfg: &ExtractionConfig,
) -> (Vec<ExtractedUnit>, EncodedMatrix) {
    let mut residual = input.clone();
    let mut all = Vec::new();
    loop {
        let pairs = row_matching(&residual, cfg.chunk_width());
        if pairs.is_empty() {
            break;
        }
        let (units, next) = extract_blocks_round(&residual, &pairs, cfg);
        if units.is_empty() {
            break;
        }
        all.extend(units);
        residual = next;
    }
    (all, residual)
}

/// Stacks extracted units as the rows of the next level's matrix.
pub fn encode_units(units: &[ExtractedUnit], prior: &EncodedMatrix) -> EncodedMatrix {
    let level = prior.level() + 1;
    let h = 1usize << level;
    let mut row_ptr = Vec::with_capacity(units.len() + 1);
    let mut col_idx = Vec::new();
    let mut payload = Vec::new();
    let mut row_map = Vec::with_capacity(units.len() * h);
    row_ptr.push(0);
    for u in units {
        debug_assert_eq!(u.height(), h);
        col_idx.extend_from_slice(&u.col_ids);
        payload.extend_from_slice(&u.payload);
        row_map.extend_from_slice(&u.row_tuple);
        row_ptr.push(col_idx.len());
    }
    EncodedMatrix::from_parts(level, prior.num_cols(), row_ptr, col_idx, payload, row_map)
}

/// Turns each non-empty residual row into one `2^level`-grained block.
///
/// Where two consecutive columns are further apart than the delta width
/// allows, zero columns are inserted every `2^B - 1` columns. An inserted
/// column avoids positions where any of the block's rows holds a nonzero
/// of `original`; it moves to the nearest free column before the stride
/// point and only collides when the whole window is occupied.
pub fn decode_residual(
    original: &CsrMatrix,
    residual: &EncodedMatrix,
    cfg: &ExtractionConfig,
) -> BlockSet {
    let g = residual.height();
    let max_gap = cfg.max_delta();
    let mut set = BlockSet::new(g, cfg.vector_size);
    for i in 0..residual.num_rows() {
        let cols = residual.row_cols(i);
        if cols.is_empty() {
            continue;
        }
        let rows = residual.row_tuple(i);
        let payload = residual.row_payload(i);
        let mut block = Block {
            row_ids: rows.to_vec(),
            col_ids: Vec::with_capacity(cols.len()),
            values: Vec::with_capacity(payload.len()),
            fill: Vec::new(),
        };
        for (k, &c) in cols.iter().enumerate() {
            if let Some(&prev) = block.col_ids.last() {
                let mut cur: usize = prev;
                while c - cur > max_gap {
                    let z = fill_column(original, rows, cur, max_gap);
                    block.fill.push(block.col_ids.len());
                    block.col_ids.push(z);
                    block.values.extend(std::iter::repeat_n(0.0, g));
                    cur = z;
                }
            }
            block.col_ids.push(c);
            block.values.extend_from_slice(&payload[k * g..(k + 1) * g]);
        }
        set.blocks.push(block);
    }
    set
}

fn fill_column(original: &CsrMatrix, rows: &[usize], cur: usize, max_gap: usize) -> usize {
    let stride = cur + max_gap;
    (cur + 1..=stride)
        .rev()
        .find(|&c| rows.iter().all(|&r| !original.contains(r, c)))
        .unwrap_or(stride)
}

/// Full multi-level extraction. Returns one block set per level, level `l`
/// holding `2^l`-grained blocks. Every structural nonzero of `a` lands in
/// exactly one block.
pub fn hierarchical_extract(a: &CsrMatrix, cfg: &ExtractionConfig) -> Result<Vec<BlockSet>> {
    cfg.validate()?;
    let mut sets = Vec::new();
    let mut input = EncodedMatrix::from_csr(a);
    loop {
        let level = input.level() as usize;
        let may_extract = cfg.max_levels.is_none_or(|max| level + 1 < max);
        let (units, residual) = if may_extract {
            multi_round_extract(&input, cfg)
        } else {
            (Vec::new(), input.clone())
        };
        sets.push(decode_residual(a, &residual, cfg));
        if units.is_empty() {
            return Ok(sets);
        }
        input = encode_units(&units, &input);
    }
}
