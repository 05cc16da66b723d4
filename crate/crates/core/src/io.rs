//! Matrix and id-list file formats.
//!
//! Two matrix encodings are supported and told apart by content, not by
//! extension:
//!
//! * `DSM1` binary: the magic bytes `DSM1`, then `u64` LE row count, `u64` LE
//!   column count, then `rows * cols` little-endian `f64` values row-major.
//! * CSV: comma separated, row-major, with an optional single header line
//!   starting with `#`.
//!
//! Id files are two-column `id,value` CSV; selection files are a single `id`
//! column. Both accept an optional header line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const DSM_MAGIC: &[u8; 4] = b"DSM1";
const DSM_HEADER_LEN: usize = 4 + 8 + 8;

/// Dense row-major `f64` matrix as read from disk, before any domain validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RawMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn read_matrix(path: &Path) -> Result<RawMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(DSM_MAGIC) {
        decode_dsm(&bytes).map_err(|m| Error::parse(path, m))
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::parse(path, "not valid UTF-8"))?;
        parse_csv_matrix(&text).map_err(|e| match e {
            Error::Shape(m) => Error::Shape(format!("{}: {m}", path.display())),
            Error::Value(m) => Error::Value(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

pub fn decode_dsm(bytes: &[u8]) -> std::result::Result<RawMatrix, String> {
    if bytes.len() < DSM_HEADER_LEN || &bytes[..4] != DSM_MAGIC {
        return Err("truncated DSM1 header".into());
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or("DSM1 dimensions overflow")?;
    let body = &bytes[DSM_HEADER_LEN..];
    if body.len() != expected {
        return Err(format!(
            "DSM1 body holds {} bytes, header declares {rows}x{cols}",
            body.len()
        ));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawMatrix { rows, cols, data })
}

pub fn encode_dsm(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len(), "matrix data does not match shape");
    let mut out = Vec::with_capacity(DSM_HEADER_LEN + data.len() * 8);
    out.extend_from_slice(DSM_MAGIC);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_csv_matrix(text: &str) -> Result<RawMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    if lines.peek().is_some_and(|l| l.trim_start().starts_with('#')) {
        lines.next();
    }
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in lines.enumerate() {
        let before = data.len();
        for field in line.split(',') {
            data.push(parse_f64(field.trim())?);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Shape(format!(
                    "row {lineno} has {width} columns, expected {c}"
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Shape("matrix file has no rows".into()))?;
    Ok(RawMatrix { rows, cols, data })
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Value(format!("cannot parse {field:?} as a number")))
}

/// Shortest round-trip decimal rendering, so CSV output reloads to the same bits.
pub fn format_csv_matrix(rows: usize, cols: usize, data: &[f64], header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for r in 0..rows {
        let row = &data[r * cols..(r + 1) * cols];
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes DSM1 when the extension is `dsm` or `bin`, CSV otherwise.
pub fn write_matrix(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("dsm") | Some("bin")
    );
    if binary {
        write_bytes(path, &encode_dsm(rows, cols, data))
    } else {
        write_bytes(path, format_csv_matrix(rows, cols, data, None).as_bytes())
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn is_header(line: &str) -> bool {
    line.split(',')
        .next()
        .is_some_and(|f| f.trim().parse::<i64>().is_err())
}

/// Reads an `id,value` CSV file. A leading non-numeric header line is skipped.
pub fn read_id_values(path: &Path) -> Result<Vec<(usize, i64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, (lineno, line)) in data_lines(&text).enumerate() {
        if k == 0 && is_header(line) {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(id), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, format!("line {lineno}: expected `id,value`")));
        };
        let id = id
            .parse::<usize>()
            .map_err(|_| Error::parse(path, format!("line {lineno}: bad id {id:?}")))?;
        let value = value
            .parse::<i64>()
            .map_err(|_| Error::parse(path, format!("line {lineno}: bad value {value:?}")))?;
        out.push((id, value));
    }
    Ok(out)
}

pub fn format_id_values(pairs: &[(usize, i64)]) -> String {
    let mut out = String::from("id,value\n");
    for (id, v) in pairs {
        out.push_str(&format!("{id},{v}\n"));
    }
    out
}

/// Reads a list of input ids: one per line, or the first column of a wider CSV.
pub fn read_id_list(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, (lineno, line)) in data_lines(&text).enumerate() {
        if k == 0 && is_header(line) {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        let id = first
            .parse::<usize>()
            .map_err(|_| Error::parse(path, format!("line {lineno}: bad id {first:?}")))?;
        out.push(id);
    }
    Ok(out)
}

pub fn format_id_list(ids: &[usize]) -> String {
    let mut out = String::from("id\n");
    for id in ids {
        out.push_str(&format!("{id}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_header_is_skipped() {
        let m = parse_csv_matrix("# probs\n1,0\n0.5,0.5\n").unwrap();
        assert_eq!((m.rows, m.cols), (2, 2));
        assert_eq!(m.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn ragged_csv_is_shape_error() {
        assert!(matches!(
            parse_csv_matrix("1,2\n3\n"),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn empty_csv_is_shape_error() {
        assert!(matches!(parse_csv_matrix(""), Err(Error::Shape(_))));
        assert!(matches!(parse_csv_matrix("# header only\n"), Err(Error::Shape(_))));
    }

    #[test]
    fn nan_parses_so_validation_can_reject_it() {
        let m = parse_csv_matrix("1,NaN\n").unwrap();
        assert!(m.data[1].is_nan());
    }

    #[test]
    fn truncated_dsm_is_rejected() {
        let mut bytes = encode_dsm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        bytes.pop();
        assert!(decode_dsm(&bytes).is_err());
        assert!(decode_dsm(b"DSM1").is_err());
    }

    #[test]
    fn id_values_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "id,value\n3,0\n7,-1\n").unwrap();
        assert_eq!(read_id_values(&p).unwrap(), vec![(3, 0), (7, -1)]);
        fs::write(&p, "3,0,1\n").unwrap();
        assert!(read_id_values(&p).is_err());
    }

    #[test]
    fn id_list_takes_first_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "id\n4\n2\n").unwrap();
        assert_eq!(read_id_list(&p).unwrap(), vec![4, 2]);
        fs::write(&p, "4,1\n2,0\n").unwrap();
        assert_eq!(read_id_list(&p).unwrap(), vec![4, 2]);
    }

    proptest! {
        #[test]
        fn dsm_round_trip_is_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(any::<u64>(), 36),
        ) {
            let data: Vec<f64> = seed[..rows * cols]
                .iter()
                .map(|b| f64::from_bits(*b))
                .collect();
            let back = decode_dsm(&encode_dsm(rows, cols, &data)).unwrap();
            let bits: Vec<u64> = back.data.iter().map(|v| v.to_bits()).collect();
            let want: Vec<u64> = data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bits, want);
        }

        #[test]
        fn csv_round_trip_preserves_values(
            data in proptest::collection::vec(-1e12f64..1e12, 6),
        ) {
            let text = format_csv_matrix(2, 3, &data, Some("x"));
            let back = parse_csv_matrix(&text).unwrap();
            prop_assert_eq!(back.data, data);
        }
    }
}
