//! CSV and JSON helpers.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Writes equal-length columns with a header row. Floats use the shortest round-trip form.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != len) || headers.len() != columns.len() {
        return Err(Error::GridMismatch("column lengths differ".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    let mut row = Vec::with_capacity(columns.len());
    for i in 0..len {
        row.clear();
        row.extend(columns.iter().map(|c| format!("{:?}", c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Schema(format!("{}: row {}: not a number: {field:?}", path.display(), line + 2))
            })?;
            cols[j].push(v);
        }
    }
    Ok((headers, cols))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
