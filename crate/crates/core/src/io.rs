//! Delimited file formats: comma-separated matrices (one row per line, no
//! header), flat `key=value` reports, per-epoch error traces, and the CV
//! report CSV. Real values print in shortest round-trip decimal notation,
//! so write-then-read is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::cv::CvRecord;
use crate::error::{Error, Result};
use crate::eval::ErrorReport;

fn parse_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        rows.push((
            idx + 1,
            line.split(',')
                .map(|cell| cell.trim().to_string())
                .collect(),
        ));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "empty matrix file".into(),
        });
    }
    let width = rows[0].1.len();
    for (line, cells) in &rows {
        if cells.len() != width {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: *line,
                message: format!("ragged row: {} cells, expected {width}", cells.len()),
            });
        }
    }
    Ok(rows)
}

/// Read a real-valued matrix.
pub fn read_real_matrix(path: &Path) -> Result<Array2<f64>> {
    let rows = parse_rows(path)?;
    let width = rows[0].1.len();
    let mut out = Array2::<f64>::zeros((rows.len(), width));
    for (r, (line, cells)) in rows.iter().enumerate() {
        for (c, cell) in cells.iter().enumerate() {
            out[[r, c]] = cell.parse::<f64>().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: *line,
                message: format!("invalid number {cell:?}"),
            })?;
        }
    }
    Ok(out)
}

/// Read a binary matrix; cells must be literal `0` or `1`.
pub fn read_binary_matrix(path: &Path) -> Result<Array2<u8>> {
    let rows = parse_rows(path)?;
    let width = rows[0].1.len();
    let mut out = Array2::<u8>::zeros((rows.len(), width));
    for (r, (line, cells)) in rows.iter().enumerate() {
        for (c, cell) in cells.iter().enumerate() {
            out[[r, c]] = match cell.as_str() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line: *line,
                        message: format!("expected binary cell, found {other:?}"),
                    });
                }
            };
        }
    }
    Ok(out)
}

/// Read a real-valued column vector (one value per line).
pub fn read_real_vector(path: &Path) -> Result<Array1<f64>> {
    let m = read_real_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("expected a single column, found {}", m.ncols()),
        });
    }
    Ok(m.column(0).to_owned())
}

pub fn write_real_matrix(m: ArrayView2<f64>, path: &Path) -> Result<()> {
    let mut text = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(text, "{}", cells.join(",")).expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_binary_matrix(m: ArrayView2<u8>, path: &Path) -> Result<()> {
    let mut text = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(text, "{}", cells.join(",")).expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_real_vector(v: ArrayView1<f64>, path: &Path) -> Result<()> {
    let mut text = String::new();
    for x in v.iter() {
        writeln!(text, "{x}").expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Per-epoch error trace as `epoch,error` lines, epochs numbered from 1.
pub fn write_error_trace(trace: &[f64], path: &Path) -> Result<()> {
    let mut text = String::new();
    for (epoch, err) in trace.iter().enumerate() {
        writeln!(text, "{},{err}", epoch + 1).expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// CV report CSV with one row per grid run.
pub fn write_cv_report(records: &[CvRecord], path: &Path) -> Result<()> {
    let mut text = String::from("lambda,gamma0,fold,val_error,sparsity\n");
    for r in records {
        writeln!(
            text,
            "{},{},{},{},{}",
            r.lambda, r.gamma0, r.fold, r.val_error, r.sparsity
        )
        .expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Flat `key=value` lines.
pub fn write_key_values(pairs: &[(&str, String)], path: &Path) -> Result<()> {
    let mut text = String::new();
    for (key, value) in pairs {
        writeln!(text, "{key}={value}").expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Error report as flat `key=value` lines; the permutation is a comma list.
pub fn write_error_report(report: &ErrorReport, path: &Path) -> Result<()> {
    let perm: Vec<String> = report.permutation.iter().map(|p| p.to_string()).collect();
    let mut pairs = vec![
        ("oe", report.oe.to_string()),
        ("otp", report.otp.to_string()),
        ("otn", report.otn.to_string()),
        ("permutation", perm.join(",")),
    ];
    if let Some(mbe) = report.mean_batch_error {
        pairs.push(("mean_batch_error", mbe.to_string()));
    }
    write_key_values(&pairs, path)
}
