//! Per-lane base/delta index compression and the chunked lane interleave.

use crate::error::{Error, Result};
use crate::extraction::DeltaBits;

/// Indices of one block after compression, lanes laid out back to back
/// (lane `t` owns `deltas[t * s..(t + 1) * s]`, `s = deltas.len() / W`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneIndices {
    pub bases: Vec<u32>,
    pub deltas: Vec<u16>,
}

/// Splits the (padded) column sequence of a block into `warp_size` equal
/// contiguous segments and delta-encodes each against its first column.
///
/// `cols` are the real columns in increasing order; positions
/// `cols.len()..stored` are padding, which re-reads the previous column
/// (delta 0). A segment made only of padding gets base 0.
pub fn compress_indices(
    cols: &[usize],
    stored: usize,
    warp_size: usize,
    delta_bits: DeltaBits,
) -> Result<LaneIndices> {
    if stored < cols.len() || !stored.is_multiple_of(warp_size) {
        return Err(Error::Malformed(format!(
            "{stored} stored columns is not a multiple of warp size {warp_size} covering {} columns",
            cols.len()
        )));
    }
    let max = delta_bits.max_delta();
    let seg = stored / warp_size;
    let mut bases = Vec::with_capacity(warp_size);
    let mut deltas = Vec::with_capacity(stored);
    for t in 0..warp_size {
        let lo = t * seg;
        let base = cols.get(lo).copied().unwrap_or(0);
        bases.push(u32::try_from(base).map_err(|_| {
            Error::DimensionOverflow(format!("column {base} exceeds 32 bits"))
        })?);
        let mut prev = base;
        for p in lo..lo + seg {
            let c = cols.get(p).copied().unwrap_or(prev);
            let d = c - prev;
            if d > max {
                return Err(Error::DeltaOverflow { delta: d, bits: delta_bits.bits() });
            }
            deltas.push(d as u16);
            prev = c;
        }
    }
    Ok(LaneIndices { bases, deltas })
}

/// Reconstructs the padded column sequence: `I_k = I_0 + sum_{i<=k} d_i`
/// within each lane segment.
pub fn decompress_indices(idx: &LaneIndices) -> Vec<usize> {
    let w = idx.bases.len();
    if w == 0 {
        return Vec::new();
    }
    let seg = idx.deltas.len() / w;
    let mut out = Vec::with_capacity(idx.deltas.len());
    for (t, &base) in idx.bases.iter().enumerate() {
        let mut cur = base as usize;
        for &d in &idx.deltas[t * seg..(t + 1) * seg] {
            cur += d as usize;
            out.push(cur);
        }
    }
    out
}

/// Interleaves lane streams so a warp step reads one contiguous chunk.
///
/// `data` is lane-major with `unit` scalars per column. For chunk `i` and
/// lane `t`, the lane's `i`-th run of `vector_size` columns lands at column
/// position `(i * warp_size + t) * vector_size`.
pub fn permute_layout<T: Copy>(data: &[T], unit: usize, warp_size: usize, vector_size: usize) -> Vec<T> {
    let cols = data.len() / unit;
    let seg = cols / warp_size;
    debug_assert_eq!(cols % warp_size, 0);
    debug_assert_eq!(seg % vector_size, 0);
    let mut out = Vec::with_capacity(data.len());
    for i in 0..seg / vector_size {
        for t in 0..warp_size {
            let from = (t * seg + i * vector_size) * unit;
            out.extend_from_slice(&data[from..from + vector_size * unit]);
        }
    }
    out
}

/// Inverse of [`permute_layout`].
pub fn unpermute_layout<T: Copy + Default>(
    data: &[T],
    unit: usize,
    warp_size: usize,
    vector_size: usize,
) -> Vec<T> {
    let cols = data.len() / unit;
    let seg = cols / warp_size;
    let mut out = vec![T::default(); data.len()];
    for i in 0..seg / vector_size {
        for t in 0..warp_size {
            let from = (i * warp_size + t) * vector_size * unit;
            let to = (t * seg + i * vector_size) * unit;
            out[to..to + vector_size * unit].copy_from_slice(&data[from..from + vector_size * unit]);
        }
    }
    out
}
