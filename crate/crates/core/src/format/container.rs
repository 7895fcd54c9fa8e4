//! `ECSR` binary container.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic    "ECSR"
//! version  u8 (= 1)
//! rows     u32
//! cols     u32
//! values   u8   value precision in bits (16, 32, 64)
//! deltas   u8   delta width in bits (4, 8, 16)
//! warp     u32
//! sets     u32
//! per set:
//!   granularity u32, vector_size u32, num_blocks u32, stored_cols u32, nnz u64
//!   row_indices   u64 count, u32 * count
//!   block_indptr  u64 count, u32 * count
//!   base_indices  u64 count, u32 * count
//!   delta_indices u64 count, packed: 4-bit two per byte (low nibble
//!                 first, last byte zero-padded), 8-bit u8, 16-bit u16
//!   block_values  u64 count, f64 * count
//! ```
//!
//! Values are always written as `f64`; the precision byte drives storage
//! accounting only. Decoding rejects anything that would not re-encode to
//! the same bytes.

use std::fs;
use std::path::Path;

use super::{EcCsrMatrix, EcCsrSet, Precision, SetDesc};
use crate::error::{Error, Result};
use crate::extraction::DeltaBits;

pub const MAGIC: &[u8; 4] = b"ECSR";
pub const VERSION: u8 = 1;

pub fn serialize(ec: &EcCsrMatrix) -> Result<Vec<u8>> {
    ec.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    put_u32(&mut out, ec.num_rows as u32);
    put_u32(&mut out, ec.num_cols as u32);
    out.push(ec.precision.bits() as u8);
    out.push(ec.delta_bits.bits() as u8);
    put_u32(&mut out, ec.warp_size as u32);
    put_u32(&mut out, ec.sets.len() as u32);
    for s in &ec.sets {
        put_u32(&mut out, s.desc.granularity);
        put_u32(&mut out, s.desc.vector_size);
        put_u32(&mut out, s.desc.num_blocks);
        put_u32(&mut out, s.desc.stored_cols);
        out.extend_from_slice(&s.desc.nnz.to_le_bytes());
        for arr in [&s.row_indices, &s.block_indptr, &s.base_indices] {
            put_len(&mut out, arr.len());
            for &v in arr.iter() {
                put_u32(&mut out, v);
            }
        }
        put_len(&mut out, s.delta_indices.len());
        pack_deltas(&mut out, &s.delta_indices, ec.delta_bits);
        put_len(&mut out, s.block_values.len());
        for &v in &s.block_values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_ecsr(ec: &EcCsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serialize(ec)?)?;
    Ok(())
}

pub fn read_ecsr(path: impl AsRef<Path>) -> Result<EcCsrMatrix> {
    deserialize(&fs::read(path)?)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u64).to_le_bytes());
}

fn packed_len(count: usize, bits: DeltaBits) -> usize {
    (count * bits.bits() as usize).div_ceil(8)
}

fn pack_deltas(out: &mut Vec<u8>, deltas: &[u16], bits: DeltaBits) {
    match bits {
        DeltaBits::B4 => {
            for pair in deltas.chunks(2) {
                let lo = pair[0] as u8 & 0x0f;
                let hi = pair.get(1).map_or(0, |&d| d as u8 & 0x0f);
                out.push(lo | (hi << 4));
            }
        }
        DeltaBits::B8 => out.extend(deltas.iter().map(|&d| d as u8)),
        DeltaBits::B16 => {
            for &d in deltas {
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Malformed(format!(
                "truncated while reading {what} at byte {} (need {n}, have {})",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// Reads a length prefix and checks the payload fits in what is left.
    fn len(&mut self, elem_bits: usize, what: &str) -> Result<usize> {
        let n = self.u64(what)?;
        let left = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(elem_bits as u64) > left * 8 {
            return Err(Error::Malformed(format!("truncated: {what} length {n} exceeds the remaining {left} bytes")));
        }
        Ok(n as usize)
    }

    fn u32_array(&mut self, what: &str) -> Result<Vec<u32>> {
        let n = self.len(32, what)?;
        let bytes = self.take(n * 4, what)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<EcCsrMatrix> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Malformed(format!("bad magic {magic:?}, expected \"ECSR\"")));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::Malformed(format!("unsupported version {version}")));
    }
    let num_rows = r.u32("row count")? as usize;
    let num_cols = r.u32("column count")? as usize;
    let precision = Precision::from_bits(r.u8("precision")? as u32)
        .map_err(|e| Error::Malformed(format!("header: {e}")))?;
    let delta_bits = DeltaBits::from_bits(r.u8("delta width")? as u32)
        .map_err(|e| Error::Malformed(format!("header: {e}")))?;
    let warp_size = r.u32("warp size")? as usize;
    if warp_size == 0 {
        return Err(Error::Malformed("header: warp size is 0".into()));
    }
    let num_sets = r.u32("set count")? as usize;

    let mut sets = Vec::with_capacity(num_sets.min(64));
    for si in 0..num_sets {
        let desc = SetDesc {
            granularity: r.u32("granularity")?,
            vector_size: r.u32("vector size")?,
            num_blocks: r.u32("block count")?,
            stored_cols: r.u32("stored columns")?,
            nnz: r.u64("nnz")?,
        };
        let row_indices = r.u32_array("row_indices")?;
        let block_indptr = r.u32_array("block_indptr")?;
        let base_indices = r.u32_array("base_indices")?;

        let n = r.len(delta_bits.bits() as usize, "delta_indices")?;
        let packed = r.take(packed_len(n, delta_bits), "delta_indices")?;
        let delta_indices = unpack_deltas(packed, n, delta_bits)
            .map_err(|m| Error::Malformed(format!("set {si}: {m}")))?;

        let n = r.len(64, "block_values")?;
        let block_values = r
            .take(n * 8, "block_values")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();

        sets.push(EcCsrSet { desc, row_indices, block_indptr, base_indices, delta_indices, block_values });
    }
    if r.pos != bytes.len() {
        return Err(Error::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let ec = EcCsrMatrix { num_rows, num_cols, precision, delta_bits, warp_size, sets };
    ec.validate()?;
    Ok(ec)
}

fn unpack_deltas(packed: &[u8], n: usize, bits: DeltaBits) -> std::result::Result<Vec<u16>, String> {
    Ok(match bits {
        DeltaBits::B4 => {
            if n % 2 == 1 && packed[n / 2] >> 4 != 0 {
                return Err("nonzero padding nibble in delta_indices".into());
            }
            (0..n).map(|i| ((packed[i / 2] >> (4 * (i % 2))) & 0x0f) as u16).collect()
        }
        DeltaBits::B8 => packed.iter().map(|&b| b as u16).collect(),
        DeltaBits::B16 => packed.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::ExtractionConfig;
    use crate::matrix::generate_uniform;
    use crate::pipeline::{build, PipelineConfig};
    use proptest::prelude::*;

    fn sample(b: DeltaBits, seed: u64) -> EcCsrMatrix {
        let a = generate_uniform(37, 80, 0.6, seed).unwrap();
        let cfg = PipelineConfig {
            extraction: ExtractionConfig::new(4, 2, b).unwrap(),
            ..PipelineConfig::default()
        };
        build(&a, &cfg).unwrap()
    }

    #[test]
    fn header_layout() {
        let ec = sample(DeltaBits::B8, 1);
        let bytes = serialize(&ec).unwrap();
        assert_eq!(&bytes[..4], b"ECSR");
        assert_eq!(bytes[4], 1);
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 37);
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 80);
        assert_eq!(bytes[13], 32);
        assert_eq!(bytes[14], 8);
        assert_eq!(u32::from_le_bytes(bytes[15..19].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[19..23].try_into().unwrap()) as usize, ec.sets.len());
    }

    #[test]
    fn nibbles_low_first() {
        let mut out = Vec::new();
        pack_deltas(&mut out, &[1, 2, 3], DeltaBits::B4);
        assert_eq!(out, vec![0x21, 0x03]);
        assert_eq!(unpack_deltas(&out, 3, DeltaBits::B4).unwrap(), vec![1, 2, 3]);
        assert!(unpack_deltas(&[0x21, 0x13], 3, DeltaBits::B4).is_err());
    }

    #[test]
    fn rejects_corrupted_headers() {
        let bytes = serialize(&sample(DeltaBits::B4, 2)).unwrap();
        let cases: Vec<(usize, u8, &str)> = vec![
            (0, b'X', "magic"),
            (4, 9, "version"),
            (13, 24, "precision"),
            (14, 5, "delta"),
        ];
        for (pos, val, what) in cases {
            let mut b = bytes.clone();
            b[pos] = val;
            let err = deserialize(&b).unwrap_err().to_string();
            assert!(err.contains(what), "{what}: {err}");
        }
        let mut b = bytes.clone();
        b[15..19].copy_from_slice(&0u32.to_le_bytes());
        assert!(deserialize(&b).unwrap_err().to_string().contains("warp"));
        // shrinking the row count leaves row indices out of range
        let mut b = bytes.clone();
        b[5..9].copy_from_slice(&1u32.to_le_bytes());
        assert!(deserialize(&b).is_err());
        assert!(deserialize(&bytes[..bytes.len() - 1]).unwrap_err().to_string().contains("truncated"));
        let mut b = bytes.clone();
        b.push(0);
        assert!(deserialize(&b).unwrap_err().to_string().contains("trailing"));
        assert!(deserialize(&bytes[..3]).is_err());
    }

    #[test]
    fn huge_length_prefix_is_rejected() {
        let ec = sample(DeltaBits::B8, 3);
        let mut bytes = serialize(&ec).unwrap();
        // first length prefix follows the 23-byte header and 24-byte desc
        bytes[47..55].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(deserialize(&bytes).unwrap_err().to_string().contains("exceeds"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn byte_identical_round_trip(seed in 0u64..10_000, b in prop_oneof![Just(DeltaBits::B4), Just(DeltaBits::B8), Just(DeltaBits::B16)]) {
            let ec = sample(b, seed);
            let bytes = serialize(&ec).unwrap();
            let back = deserialize(&bytes).unwrap();
            prop_assert_eq!(&back, &ec);
            prop_assert_eq!(serialize(&back).unwrap(), bytes);
        }
    }
}
