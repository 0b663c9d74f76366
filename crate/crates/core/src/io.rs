//! Plain-text tensor and matrix files.
//!
//! Dense tensor: a header line `I1 I2 I3` followed by `I1*I2*I3` values in
//! column-major order (first index fastest).
//!
//! COO tensor: a header line `I1 I2 I3` followed by lines `i j k value` with
//! 1-based indices. Blank lines and lines starting with `#` are ignored.
//!
//! Matrix: a header line `rows cols` followed by the values column by column.
//!
//! Values are written with 17 significant digits so round trips are exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::{DenseTensor3, Dims3, Entry, ObservationSet};

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number '{tok}'"),
    })
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid index '{tok}'"),
    })
}

fn is_skipped(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_header<const N: usize>(line: &str, lineno: usize) -> Result<[usize; N]> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != N {
        return Err(Error::Parse {
            line: lineno,
            message: format!("header needs {N} sizes, found {}", toks.len()),
        });
    }
    let mut out = [0; N];
    for (o, t) in out.iter_mut().zip(&toks) {
        *o = parse_index(t, lineno)?;
        if *o == 0 {
            return Err(Error::Parse {
                line: lineno,
                message: "sizes must be positive".into(),
            });
        }
    }
    Ok(out)
}

/// Splits into the header (first non-comment line) and the remaining lines
/// with their 1-based numbers.
fn header_and_body(text: &str) -> Result<((usize, &str), impl Iterator<Item = (usize, &str)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !is_skipped(l));
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    Ok((header, lines))
}

fn read_all(mut r: impl Read) -> Result<String> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    Ok(s)
}

/// Reads a dense tensor from any reader.
pub fn parse_dense(r: impl Read) -> Result<DenseTensor3> {
    let text = read_all(r)?;
    let ((hl, header), body) = header_and_body(&text)?;
    let dims: Dims3 = parse_header(header, hl)?;
    let expected: usize = dims.iter().product();
    let mut data = Vec::with_capacity(expected);
    for (lineno, line) in body {
        for tok in line.split_whitespace() {
            data.push(parse_value(tok, lineno)?);
        }
    }
    if data.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} values, found {}",
            data.len()
        )));
    }
    DenseTensor3::from_vec(dims, data)
}

pub fn write_dense_to(t: &DenseTensor3, w: impl Write) -> Result<()> {
    let mut w = BufWriter::new(w);
    let [a, b, c] = t.dims();
    writeln!(w, "{a} {b} {c}")?;
    for v in t.as_slice() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseTensor3> {
    parse_dense(BufReader::new(File::open(path)?))
}

pub fn write_dense(path: impl AsRef<Path>, t: &DenseTensor3) -> Result<()> {
    write_dense_to(t, File::create(path)?)
}

/// Reads an observation set from any reader.
pub fn parse_coo(r: impl Read) -> Result<ObservationSet> {
    let text = read_all(r)?;
    let ((hl, header), body) = header_and_body(&text)?;
    let dims: Dims3 = parse_header(header, hl)?;
    let mut entries = Vec::new();
    for (lineno, line) in body {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 'i j k value', found {} fields", toks.len()),
            });
        }
        let index = [
            parse_index(toks[0], lineno)?,
            parse_index(toks[1], lineno)?,
            parse_index(toks[2], lineno)?,
        ];
        let value = parse_value(toks[3], lineno)?;
        if (0..3).any(|n| index[n] == 0 || index[n] > dims[n]) {
            return Err(Error::Validation(format!(
                "line {lineno}: index ({}, {}, {}) out of range for dims {dims:?}",
                index[0], index[1], index[2]
            )));
        }
        entries.push(Entry { index, value });
    }
    ObservationSet::new(dims, entries)
}

pub fn write_coo_to(omega: &ObservationSet, w: impl Write) -> Result<()> {
    let mut w = BufWriter::new(w);
    let [a, b, c] = omega.dims();
    writeln!(w, "{a} {b} {c}")?;
    for e in omega.entries() {
        let [i, j, k] = e.index;
        writeln!(w, "{i} {j} {k} {:.16e}", e.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coo(path: impl AsRef<Path>) -> Result<ObservationSet> {
    parse_coo(BufReader::new(File::open(path)?))
}

pub fn write_coo(path: impl AsRef<Path>, omega: &ObservationSet) -> Result<()> {
    write_coo_to(omega, File::create(path)?)
}

pub fn parse_matrix(r: impl BufRead) -> Result<Matrix> {
    let text = read_all(r)?;
    let ((hl, header), body) = header_and_body(&text)?;
    let [rows, cols]: [usize; 2] = parse_header(header, hl)?;
    let mut data = Vec::with_capacity(rows * cols);
    for (lineno, line) in body {
        for tok in line.split_whitespace() {
            data.push(parse_value(tok, lineno)?);
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix(BufReader::new(File::open(path)?))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for v in m.iter() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}
