//! Matrix Market `array` exchange format.
//!
//! The reader accepts `real` and `complex` fields with `general` symmetry;
//! the writer always emits `%%MatrixMarket matrix array complex general`
//! with a column-major body and round-trip exact float formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{c64, is_finite, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

pub fn parse_matrix_market(text: &str) -> Result<Matrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market input".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market header: {header:?}")));
    }
    if tokens[2] != "array" {
        return Err(Error::Parse(format!("unsupported format {:?}, expected array", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(Error::Parse(format!("unsupported field {other:?}"))),
    };
    if tokens[4] != "general" {
        return Err(Error::Parse(format!("unsupported symmetry {:?}", tokens[4])));
    }

    let mut values = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .flat_map(str::split_whitespace);
    let mut next_usize = |what: &str| -> Result<usize> {
        let tok = values
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
    };
    let rows = next_usize("row count")?;
    let cols = next_usize("column count")?;

    let mut entries = Vec::with_capacity(rows * cols);
    for k in 0..rows * cols {
        let re = parse_f64(values.next(), k)?;
        let im = match field {
            Field::Real => 0.0,
            Field::Complex => parse_f64(values.next(), k)?,
        };
        entries.push(c64(re, im));
    }
    if values.next().is_some() {
        return Err(Error::Parse("trailing data after matrix body".into()));
    }
    let m = Matrix::from_column_slice(rows, cols, &entries);
    if !is_finite(&m) {
        return Err(Error::Parse("matrix has non-finite entries".into()));
    }
    Ok(m)
}

fn parse_f64(tok: Option<&str>, k: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("body ended early at entry {k}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad number {tok:?} at entry {k}")))
}

pub fn format_matrix_market(m: &Matrix) -> String {
    let mut out = String::with_capacity(32 + m.len() * 48);
    out.push_str("%%MatrixMarket matrix array complex general\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(&text)
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(m))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_real_rows, jordan_block};

    #[test]
    fn reads_real_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% a comment\n2 3\n1\n4\n2\n5\n3\n6\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m, from_real_rows(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    }

    #[test]
    fn reads_complex() {
        let text = "%%MatrixMarket matrix array complex general\n1 2\n1.5 -2\n0 1e-3\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m[(0, 0)], c64(1.5, -2.0));
        assert_eq!(m[(0, 1)], c64(0.0, 1e-3));
    }

    #[test]
    fn round_trips_bit_exactly() {
        let m = Matrix::from_fn(3, 2, |i, j| c64(0.1 * (i as f64 + 1.0) / 3.0, -(j as f64) / 7.0));
        let back = parse_matrix_market(&format_matrix_market(&m)).unwrap();
        assert_eq!(m, back);
        let j4 = jordan_block(4);
        assert_eq!(parse_matrix_market(&format_matrix_market(&j4)).unwrap(), j4);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_matrix_market("").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\nabc\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n2\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\nNaN\n").is_err());
    }
}
