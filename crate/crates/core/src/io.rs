//! Numeric CSV tables and the other small file formats used by the harness.
//!
//! Every table is a header row followed by numeric rows. `NaN` is written as
//! an empty cell (a missing value) and read back as `NaN`. Floats use Rust's
//! shortest round-trip formatting so identical data gives identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::readout::BooleanReadout;

/// A parsed numeric CSV file, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn try_column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Column by header name; `path` is used for the error message only.
    pub fn column(&self, path: &Path, name: &str) -> Result<&[f64]> {
        self.try_column(name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column `{name}` (found {:?})", self.headers),
        })
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

/// Writes equal-length columns under the given headers.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(headers.len(), columns.len(), "one header per column");
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::config("columns must have equal lengths"));
    }
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(headers).map_err(|e| csv_err(path, e))?;
    let mut record = Vec::with_capacity(columns.len());
    for r in 0..rows {
        record.clear();
        record.extend(columns.iter().map(|c| fmt_f64(c[r])));
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a row-major matrix with headers `prefix_0 .. prefix_{n-1}`.
pub fn write_matrix(path: &Path, prefix: &str, rows: &[Vec<f64>]) -> Result<()> {
    let width = rows.first().map_or(0, Vec::len);
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers: Vec<String> = (0..width).map(|i| format!("{prefix}_{i}")).collect();
    w.write_record(&headers).map_err(|e| csv_err(path, e))?;
    for row in rows {
        if row.len() != width {
            return Err(Error::config("ragged matrix rows"));
        }
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<Table> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for record in r.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column `{}`: `{cell}` is not a number", headers[i]),
                })?
            };
            columns[i].push(v);
        }
    }
    Ok(Table { headers, columns })
}

/// Mask file: `n` characters of `0`/`1` followed by a newline.
pub fn write_mask(path: &Path, mask: &BooleanReadout) -> Result<()> {
    ensure_parent(path)?;
    let mut s: String = mask.bits().iter().map(|&b| if b { '1' } else { '0' }).collect();
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<BooleanReadout> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bits = text
        .trim_end()
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("character {i} is `{other}`, expected 0 or 1"),
            }),
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(BooleanReadout::from_bits(bits))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::config(format!("cannot serialize {}: {e}", path.display())))?;
    s.push('\n');
    write_text(path, &s)
}
