//! Plain-text matrix and vector files.
//!
//! Matrix: first line `n d`, then `n` lines of `d` whitespace-separated
//! decimals. Vector: first line `n`, then `n` decimals (one per line when
//! written, any whitespace when read).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|e| parse_err(path, line, format!("bad number {tok:?}: {e}")))
}

fn parse_usize(path: &Path, line: usize, tok: Option<&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, "missing size"))?;
    tok.parse::<usize>()
        .map_err(|e| parse_err(path, line, format!("bad size {tok:?}: {e}")))
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut toks = header.split_whitespace();
    let n = parse_usize(path, hline + 1, toks.next())?;
    let d = parse_usize(path, hline + 1, toks.next())?;
    let mut data = Vec::with_capacity(n * d);
    let mut seen_rows = 0;
    for (lno, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_f64(path, lno + 1, tok)?);
        }
        if data.len() - before != d {
            return Err(parse_err(
                path,
                lno + 1,
                format!("expected {d} entries, found {}", data.len() - before),
            ));
        }
        seen_rows += 1;
    }
    if seen_rows != n {
        return Err(parse_err(
            path,
            hline + 1,
            format!("header declares {n} rows, found {seen_rows}"),
        ));
    }
    DenseMatrix::new(n, d, data)
}

pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let n = parse_usize(path, hline + 1, header.split_whitespace().next())?;
    let mut out = Vec::with_capacity(n);
    for (lno, line) in lines {
        for tok in line.split_whitespace() {
            let v = parse_f64(path, lno + 1, tok)?;
            if !v.is_finite() {
                return Err(parse_err(path, lno + 1, "non-finite entry"));
            }
            out.push(v);
        }
    }
    if out.len() != n {
        return Err(parse_err(
            path,
            hline + 1,
            format!("header declares {n} entries, found {}", out.len()),
        ));
    }
    Ok(out)
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_matrix(a: &DenseMatrix) -> String {
    let mut s = format!("{} {}\n", a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let row = a.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:e}");
        }
        s.push('\n');
    }
    s
}

pub fn format_vector(v: &[f64]) -> String {
    let mut s = format!("{}\n", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vector(&text, path)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_vector(v)).map_err(|e| Error::io(path, e))
}
