//! Plain-text matrix and vector files.
//!
//! Matrix: a header line `rows cols`, then one row per line of
//! space-separated values. Vector: a header line `dim`, then one value per
//! line. Values are written with 17 significant digits so they round-trip.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn matrix_from_str(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header must be `rows cols`, got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for line in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_value(tok)?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!("row {seen} has {} values, expected {cols}", data.len() - before)));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse(format!("{seen} rows, expected {rows}")));
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn vector_to_string(v: &DenseVector) -> String {
    let mut s = format!("{}\n", v.dim());
    for &x in v.iter() {
        let _ = writeln!(s, "{}", fmt_f64(x));
    }
    s
}

pub fn vector_from_str(text: &str) -> Result<DenseVector> {
    let mut tokens = text.split_whitespace();
    let dim: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("missing header".into()))?
        .parse()
        .map_err(|_| Error::Parse("bad vector header".into()))?;
    let entries: Vec<f64> = tokens.map(parse_value).collect::<Result<_>>()?;
    if entries.len() != dim {
        return Err(Error::Parse(format!("{} values, expected {dim}", entries.len())));
    }
    DenseVector::new(entries)
}

fn parse_value(tok: &str) -> Result<f64> {
    tok.parse().map_err(|_| Error::Parse(format!("bad number {tok:?}")))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    fs::write(path, matrix_to_string(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    matrix_from_str(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &DenseVector) -> Result<()> {
    fs::write(path, vector_to_string(v))?;
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DenseVector> {
    vector_from_str(&fs::read_to_string(path)?)
}
