use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file, IngestError};
use crate::Matrix;

/// Parses a headerless CSV of reals, one frame per row.
pub fn parse_embedding_csv(text: &str) -> Result<Matrix, IngestError> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .collect::<Vec<_>>();
    let end = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |p| p + 1);
    let lines = &lines[..end];
    if lines.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let mut data = Vec::new();
    let mut width = 0;
    for (row, line) in lines.iter().enumerate() {
        let mut cells = 0;
        for (col, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| IngestError::NonNumericCell {
                row,
                col,
                text: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IngestError::NonFinite { row, col });
            }
            data.push(value);
            cells += 1;
        }
        if row == 0 {
            width = cells;
        } else if cells != width {
            return Err(IngestError::RaggedRows { row, expected: width, found: cells });
        }
    }
    if lines.len() < 2 {
        return Err(IngestError::TooFewFrames(lines.len()));
    }
    Ok(Matrix::new(data, lines.len(), width)?)
}

pub fn load_embedding_csv(path: &Path) -> Result<Matrix, IngestError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8_lossy(&bytes);
    parse_embedding_csv(&text)
}

/// Writes shortest round-trip decimal representations, so reloading is exact.
pub fn write_embedding_csv(matrix: &Matrix, path: &Path) -> Result<(), IngestError> {
    let mut out = String::new();
    for row in matrix.rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("write to string");
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}
