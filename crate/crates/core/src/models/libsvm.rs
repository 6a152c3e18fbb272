//! libsvm sparse text format: `label idx:val idx:val ...` with 1-based,
//! increasing feature indices.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::data::Dataset;
use crate::{Error, Result};

/// Feature count of the a9a dataset.
pub const A9A_DIM: usize = 123;

/// Reads a libsvm file into a dense dataset. With `dim = None` the dimension
/// is the largest index seen.
pub fn load_libsvm(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::DatasetMissing { path: path.to_path_buf() },
        _ => Error::Io(e),
    })?;
    parse_libsvm(BufReader::new(file), dim)
}

fn parse_label(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("invalid label {tok:?}") })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::Parse { line, message: format!("label {tok:?} is not a binary class") })
    }
}

pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_ascii_whitespace();
        let label = parse_label(tokens.next().unwrap_or_default(), line_no)?;
        let mut entries = Vec::new();
        let mut prev = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected idx:val, got {tok:?}") })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid index {idx:?}") })?;
            if idx == 0 {
                return Err(Error::Parse { line: line_no, message: "feature indices are 1-based".into() });
            }
            if idx <= prev {
                return Err(Error::Parse { line: line_no, message: format!("index {idx} not increasing") });
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(Error::Dimension { line: line_no, index: idx, dim: d });
                }
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("invalid value {val:?}") })?;
            prev = idx;
            max_index = max_index.max(idx);
            entries.push((idx, val));
        }
        rows.push(entries);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Data("libsvm input has no samples".into()));
    }
    let d = dim.unwrap_or(max_index).max(1);
    let mut features = vec![0.0; rows.len() * d];
    for (r, entries) in rows.iter().enumerate() {
        for &(idx, val) in entries {
            features[r * d + idx - 1] = val;
        }
    }
    Dataset::new(d, features, labels)
}

/// Writes nonzero entries only; labels as `+1` / `-1`.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for i in 0..ds.len() {
        let label = if ds.target(i) > 0.0 { "+1" } else { "-1" };
        write!(out, "{label}")?;
        for (k, v) in ds.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", k + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
