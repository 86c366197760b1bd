//! The JSON interchange format for matrices.
//!
//! ```json
//! {
//!   "space": {"kind":"z_interval","n":3},
//!   "rows": "same",
//!   "entries": [
//!     [0, 0, 1],
//!     [1, 0, -0.5]
//!   ]
//! }
//! ```
//!
//! `rows` is `"same"` for `Y = X` or the number of rows of a bare row set.
//! The writer is canonical: entries sorted by `(row, col)`, one per line, and
//! values printed like C's `%.17g`, so reading and rewriting a canonical file
//! reproduces it byte for byte.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::opmat::{IndexSet, IndexedMatrix};
use crate::space::{MetricSpace, SpaceKind};

/// Formats like C's `printf("%.17g", v)`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let esign = if exp < 0 { '-' } else { '+' };
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        return format!("{sign}{head}{frac}e{esign}{:02}", exp.abs());
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() { int.to_string() } else { format!("{int}.{frac}") }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    format!("{sign}{body}")
}

/// Canonical text of a matrix file. The column set must carry a metric.
pub fn write_matrix_string(a: &IndexedMatrix) -> Result<String> {
    let space = a
        .col_space()
        .ok_or_else(|| Error::Format("the interchange format needs a metric column set".into()))?;
    let rows = if a.is_square_metric() { "\"same\"".to_string() } else { a.nrows().to_string() };
    let space_json = serde_json::to_string(space.kind()).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"space\": {space_json},");
    let _ = writeln!(out, "  \"rows\": {rows},");
    if a.nnz() == 0 {
        let _ = writeln!(out, "  \"entries\": []");
    } else {
        let _ = writeln!(out, "  \"entries\": [");
        let n = a.nnz();
        for (k, (r, c, v)) in a.entries().enumerate() {
            let comma = if k + 1 < n { "," } else { "" };
            let _ = writeln!(out, "    [{r}, {c}, {}]{comma}", format_g17(v));
        }
        let _ = writeln!(out, "  ]");
    }
    let _ = writeln!(out, "}}");
    Ok(out)
}

/// Parses a matrix file. Malformed input is a format error; an invalid
/// explicit metric is an invalid-metric error.
pub fn read_matrix_str(text: &str) -> Result<IndexedMatrix> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid JSON: {e}")))?;
    let obj = doc.as_object().ok_or_else(|| Error::Format("top level must be an object".into()))?;
    let kind: SpaceKind = serde_json::from_value(obj.get("space").cloned().ok_or_else(|| Error::Format("missing \"space\"".into()))?)
        .map_err(|e| Error::Format(format!("invalid space: {e}")))?;
    let space = Arc::new(MetricSpace::new(kind)?);
    let cols = IndexSet::Metric(space.clone());
    let rows = match obj.get("rows") {
        None => return Err(Error::Format("missing \"rows\"".into())),
        Some(Value::String(s)) if s == "same" => cols.clone(),
        Some(v) => IndexSet::Plain(
            v.as_u64()
                .ok_or_else(|| Error::Format(format!("\"rows\" must be \"same\" or a non-negative integer, got {v}")))?
                as usize,
        ),
    };
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("missing \"entries\" array".into()))?;
    let mut triplets = Vec::with_capacity(entries.len());
    for (k, e) in entries.iter().enumerate() {
        let bad = || Error::Format(format!("entry {k} must be [row, col, value]"));
        let arr = e.as_array().filter(|a| a.len() == 3).ok_or_else(bad)?;
        let r = arr[0].as_u64().ok_or_else(bad)? as usize;
        let c = arr[1].as_u64().ok_or_else(bad)? as usize;
        let v = arr[2].as_f64().ok_or_else(bad)?;
        triplets.push((r, c, v));
    }
    IndexedMatrix::from_triplets(rows, cols, triplets)
}

pub fn read_matrix_file(path: &Path) -> Result<IndexedMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    read_matrix_str(&text)
}

pub fn write_matrix_file(path: &Path, a: &IndexedMatrix) -> Result<()> {
    write_atomic(path, write_matrix_string(a)?.as_bytes())
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Parses a function on the column set: a JSON array of numbers.
pub fn read_vector_str(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid vector: {e}")))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format("vector entries must be finite".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (-0.5, "-0.5"),
            (0.1, "0.10000000000000001"),
            (1.0 / 3.0, "0.33333333333333331"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (2.5e-300, "2.5e-300"),
            (0.0001, "0.0001"),
            (-0.0, "0"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g17(v), s, "{v:e}");
            if v != 0.0 {
                assert_eq!(s.parse::<f64>().unwrap(), v);
            }
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = crate::zoo::random_banded(12, 2, None, 4).unwrap();
        let text = write_matrix_string(&a).unwrap();
        let b = read_matrix_str(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(write_matrix_string(&b).unwrap(), text);
        let s = crate::zoo::staircase_matrix(2.0, 5).unwrap();
        let text = write_matrix_string(&s).unwrap();
        assert!(text.contains("\"rows\": 15,"));
        assert_eq!(write_matrix_string(&read_matrix_str(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_matrix_str("{"), Err(Error::Format(_))));
        assert!(matches!(read_matrix_str("{\"space\":{\"kind\":\"z_interval\",\"n\":2},\"rows\":\"same\"}"), Err(Error::Format(_))));
        let dup = "{\"space\":{\"kind\":\"z_interval\",\"n\":2},\"rows\":\"same\",\"entries\":[[0,0,1],[0,0,2]]}";
        assert!(matches!(read_matrix_str(dup), Err(Error::Format(_))));
        let bad_metric =
            "{\"space\":{\"kind\":\"explicit\",\"distances\":[[0,1,5],[1,0,1],[5,1,0]]},\"rows\":\"same\",\"entries\":[]}";
        assert!(matches!(read_matrix_str(bad_metric), Err(Error::InvalidMetric(_))));
        let oob = "{\"space\":{\"kind\":\"z_interval\",\"n\":2},\"rows\":\"same\",\"entries\":[[0,5,1]]}";
        assert!(matches!(read_matrix_str(oob), Err(Error::Shape(_))));
    }
}
