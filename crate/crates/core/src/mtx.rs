//! MatrixMarket coordinate I/O (`real`/`integer`, `general` only).
//!
//! Indices are 1-based on disk and 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

const MAX_DIM: u64 = u32::MAX as u64;

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

pub fn save_matrix_market(a: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str, lineno: usize) -> Result<()> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(lineno, "header must start with %%MatrixMarket"));
    }
    if tokens.len() != 5 {
        return Err(parse_err(lineno, "header must have the form `%%MatrixMarket matrix coordinate real general`"));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(lineno, format!("unsupported object `{}`", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported format `{}`, only coordinate", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(lineno, format!("unsupported field `{}`", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(parse_err(lineno, format!("unsupported symmetry `{}`", tokens[4])));
    }
    Ok(())
}

fn parse_dim(tok: Option<&str>, lineno: usize, what: &str) -> Result<u64> {
    let tok = tok.ok_or_else(|| parse_err(lineno, format!("missing {what}")))?;
    tok.parse::<u64>()
        .map_err(|_| parse_err(lineno, format!("cannot parse {what} `{tok}`")))
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    parse_header(&header?, lineno)?;

    let mut dims = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut expected = 0usize;
    let mut last_line = lineno;

    for (lineno, line) in lines {
        let line = line?;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        match dims {
            None => {
                let m = parse_dim(tok.next(), lineno, "number of rows")?;
                let n = parse_dim(tok.next(), lineno, "number of columns")?;
                let nnz = parse_dim(tok.next(), lineno, "number of entries")?;
                if tok.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on size line"));
                }
                if m > MAX_DIM || n > MAX_DIM {
                    return Err(Error::DimensionOverflow(format!(
                        "{m} x {n} exceeds the 32-bit index range"
                    )));
                }
                if nnz > m.saturating_mul(n) {
                    return Err(parse_err(lineno, format!("{nnz} entries cannot fit in {m} x {n}")));
                }
                dims = Some((m as usize, n as usize));
                expected = nnz as usize;
                entries.reserve(expected.min(1 << 24));
            }
            Some((m, n)) => {
                if entries.len() == expected {
                    return Err(parse_err(lineno, format!("more than the declared {expected} entries")));
                }
                let i = parse_dim(tok.next(), lineno, "row index")? as usize;
                let j = parse_dim(tok.next(), lineno, "column index")? as usize;
                let vtok = tok.next().ok_or_else(|| parse_err(lineno, "missing value"))?;
                let v: f64 = vtok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("cannot parse value `{vtok}`")))?;
                if tok.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on entry line"));
                }
                if i == 0 || i > m || j == 0 || j > n {
                    return Err(parse_err(lineno, format!("entry ({i}, {j}) outside {m} x {n}")));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }

    let (m, n) = dims.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if entries.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} entries, found {}", entries.len()),
        ));
    }
    CsrMatrix::from_triplets(m, n, entries)
}

/// Writes `a` in row-major order. Values use Rust's shortest round-trip
/// float formatting, so reading the file back reproduces every bit.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, w: &mut W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.num_rows(), a.num_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::generate_uniform;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn read(s: &str) -> Result<CsrMatrix> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn reads_diagonal() {
        let a = read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 5.0\n2 2 3.0\n").unwrap();
        assert_eq!(a.row_ptr(), &[0, 1, 2]);
        assert_eq!(a.col_idx(), &[0, 1]);
        assert_eq!(a.values(), &[5.0, 3.0]);
    }

    #[test]
    fn reads_empty() {
        let a = read("%%MatrixMarket matrix coordinate real general\n% comment\n3 3 0\n").unwrap();
        assert_eq!(a.row_ptr(), &[0, 0, 0, 0]);
        assert_eq!(a.nnz(), 0);
    }

    #[test]
    fn keeps_explicit_zeros() {
        let a = read("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 0.0\n").unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), Some(0.0));
    }

    #[test]
    fn parse_error_has_line_number() {
        let err = read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 5.0\n2 x 3.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = read("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_unsupported_headers() {
        for h in [
            "%%MatrixMarket matrix array real general",
            "%%MatrixMarket matrix coordinate complex general",
            "%%MatrixMarket matrix coordinate real symmetric",
            "%MatrixMarket matrix coordinate real general",
        ] {
            let err = read(&format!("{h}\n1 1 0\n")).unwrap_err();
            assert!(matches!(err, Error::Parse { line: 1, .. }), "{h}: {err}");
        }
    }

    #[test]
    fn rejects_duplicates() {
        let err = read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n1 2 3.0\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { row: 1, col: 2 }));
    }

    #[test]
    fn rejects_count_mismatch() {
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n").is_err());
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1.0\n2 2 1.0\n").is_err());
    }

    #[test]
    fn rejects_dimension_overflow() {
        let err = read("%%MatrixMarket matrix coordinate real general\n99999999999 2 0\n").unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow(_)));
    }

    // Sort-then-compare: a shuffled entry list must parse to the same
    // matrix as the row-major listing.
    #[test]
    fn unsorted_entries_match_sorted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for seed in 0..50 {
            let a = generate_uniform(1 + seed as usize % 9, 1 + (seed as usize * 7) % 11, 0.5, seed).unwrap();
            let mut lines: Vec<String> =
                a.triplets().map(|(i, j, v)| format!("{} {} {:e}", i + 1, j + 1, v)).collect();
            let mut sorted = lines.clone();
            sorted.sort_by_key(|l| {
                let mut t = l.split_whitespace().map(|s| s.parse::<usize>().unwrap_or(0));
                (t.next().unwrap(), t.next().unwrap())
            });
            lines.shuffle(&mut rng);
            let mk = |ls: &[String]| {
                format!(
                    "%%MatrixMarket matrix coordinate real general\n{} {} {}\n{}\n",
                    a.num_rows(),
                    a.num_cols(),
                    a.nnz(),
                    ls.join("\n")
                )
            };
            let from_shuffled = read(&mk(&lines)).unwrap();
            let from_sorted = read(&mk(&sorted)).unwrap();
            assert_eq!(from_shuffled, from_sorted);
            assert_eq!(from_sorted, a);
        }
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(m in 0usize..12, n in 1usize..12, s in 0.0f64..0.95, seed in 0u64..500) {
            let a = generate_uniform(m, n, s, seed).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = read_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
