//! Shared text encodings: 9-significant-digit numbers and the lower-triangle
//! matrix layout used for co-association and item-similarity dumps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `v` with 9 significant digits, `%.9g` style.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Dense symmetric matrix with row/column ids, as persisted on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMatrix {
    pub ids: Vec<String>,
    /// Row-major full `n × n` values.
    pub values: Vec<f64>,
}

pub fn write_triangular(path: &Path, ids: &[String], values: &[f64]) -> Result<()> {
    fs::write(path, encode_triangular(ids, values)).map_err(|e| Error::io(path, e))
}

pub fn encode_triangular(ids: &[String], values: &[f64]) -> String {
    let n = ids.len();
    debug_assert_eq!(values.len(), n * n);
    let mut out = ids.join("\t");
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..=i).map(|j| sig9(values[i * n + j])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_triangular(path: &Path) -> Result<TriangularMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing id header"))?;
    let ids: Vec<String> = if header.is_empty() {
        Vec::new()
    } else {
        header.split('\t').map(str::to_string).collect()
    };
    let n = ids.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(path, i + 2, "missing matrix row"))?;
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != i + 1 {
            return Err(Error::parse(
                path,
                i + 2,
                format!("expected {} values, found {}", i + 1, row.len()),
            ));
        }
        for (j, tok) in row.iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, i + 2, format!("bad number {tok:?}")))?;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::parse(path, n + 2, "trailing data after matrix"));
    }
    Ok(TriangularMatrix { ids, values })
}
