//! CSV artifacts. Complex values are written as `re,im` column pairs with
//! round-trip precision.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::stap::WaveformMatrix;

pub const WAVEFORM_HEADER: [&str; 4] = ["antenna", "sample", "re", "im"];
pub const FILTER_HEADER: [&str; 3] = ["index", "re", "im"];

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::WaveformFile(format!("{}: {e}", path.display()))
}

/// Rows `antenna,sample,re,im`, 1-based indices, antenna-major.
pub fn write_waveform_csv(path: &Path, w: &WaveformMatrix) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    out.write_record(WAVEFORM_HEADER)
        .map_err(|e| csv_err(path, e))?;
    let m = w.matrix();
    for n in 0..m.nrows() {
        for l in 0..m.ncols() {
            let v = m[(n, l)];
            out.write_record([
                (n + 1).to_string(),
                (l + 1).to_string(),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_waveform_csv(path: &Path) -> Result<WaveformMatrix> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().map(str::trim).collect::<Vec<_>>() != WAVEFORM_HEADER {
        return Err(csv_err(
            path,
            format!("expected header {}", WAVEFORM_HEADER.join(",")),
        ));
    }
    let mut entries = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 4 {
            return Err(csv_err(
                path,
                format!("row {} has {} fields", row + 2, rec.len()),
            ));
        }
        let parse_idx = |i: usize| -> Result<usize> {
            rec[i]
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|v| *v >= 1)
                .ok_or_else(|| csv_err(path, format!("row {}: bad index `{}`", row + 2, &rec[i])))
        };
        let parse_val = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| csv_err(path, format!("row {}: bad number `{}`", row + 2, &rec[i])))
        };
        entries.push((parse_idx(0)?, parse_idx(1)?, parse_val(2)?, parse_val(3)?));
    }
    if entries.is_empty() {
        return Err(csv_err(path, "no samples"));
    }
    let n_tx = entries.iter().map(|e| e.0).max().unwrap_or(0);
    let len = entries.iter().map(|e| e.1).max().unwrap_or(0);
    if entries.len() != n_tx * len {
        return Err(csv_err(
            path,
            format!("{} rows do not form a {n_tx}x{len} waveform", entries.len()),
        ));
    }
    let mut m = CMatrix::zeros(n_tx, len);
    let mut seen = vec![false; n_tx * len];
    for (n, l, re, im) in entries {
        let k = (n - 1) * len + (l - 1);
        if seen[k] {
            return Err(csv_err(path, format!("duplicate sample ({n}, {l})")));
        }
        seen[k] = true;
        m[(n - 1, l - 1)] = c(re, im);
    }
    Ok(WaveformMatrix::new(m))
}

pub fn write_filter_csv(path: &Path, w: &CVector) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    out.write_record(FILTER_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for (i, v) in w.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            format!("{:e}", v.re),
            format!("{:e}", v.im),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    out.flush()?;
    Ok(())
}

/// Write a CSV with the given header and pre-formatted rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    out.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        out.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    out.flush()?;
    Ok(())
}
