//! CSV ingestion and report writing. All floats are emitted with 17
//! significant digits so a rerun is byte-identical and every double
//! round-trips exactly.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::errors::{CliError, CliResult};

/// 17 significant digits, scientific.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Read a numeric matrix: comma-separated decimal floats, one point per row,
/// optional single header row. Errors carry the 1-based file row index.
pub fn read_matrix_csv(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_csv(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut allow_header = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row_ix = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut parsed = Vec::with_capacity(fields.len());
        let mut bad_field: Option<(usize, &str)> = None;
        for (k, f) in fields.iter().enumerate() {
            match f.parse::<f64>() {
                Ok(v) => parsed.push(v),
                Err(_) => {
                    bad_field = Some((k + 1, f));
                    break;
                }
            }
        }
        if let Some((k, f)) = bad_field {
            if allow_header {
                // a leading non-numeric row is the header
                allow_header = false;
                continue;
            }
            return Err(format!("row {row_ix}: field {k}: '{f}' is not a decimal float"));
        }
        allow_header = false;
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(format!(
                    "row {row_ix}: has {} fields, expected {w}",
                    parsed.len()
                ));
            }
            _ => {}
        }
        rows.push(parsed);
    }
    let w = width.ok_or("no data rows")?;
    if w == 0 {
        return Err("rows have no fields".into());
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), w, &flat))
}

/// Coordinates as CSV with a y0,y1,... header.
pub fn write_matrix_csv(path: &Path, y: &DMatrix<f64>) -> CliResult<()> {
    let header: Vec<String> = (0..y.ncols()).map(|j| format!("y{j}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..y.nrows() {
        let row: Vec<String> = (0..y.ncols()).map(|j| fmt_float(y[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Pretty JSON with keys in struct order, to the file when given, otherwise
/// to stdout.
pub fn emit_json<T: Serialize>(out: Option<&Path>, report: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
