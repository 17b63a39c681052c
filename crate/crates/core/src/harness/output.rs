use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{RbError, Result};

/// 17 significant digits: enough to round-trip every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Missing values are written as empty fields.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes a comma-separated file with a header line.
pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(RbError::invalid(format!(
                "{}: row has {} fields, header has {}",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        let _ = writeln!(text, "{}", row.join(","));
    }
    fs::write(path, text).map_err(|e| RbError::io(path, e))
}

/// Header and rows of a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| RbError::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| RbError::Format { path: path.into(), reason: "empty file".into() })?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_owned).collect();
        if row.len() != header.len() {
            return Err(RbError::Format {
                path: path.into(),
                reason: format!("line {} has {} fields, header has {}", i + 2, row.len(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// `prefix_1, …, prefix_p`
pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}_{i}")).collect()
}
