//! K×K grids as CSV: a header row and column of track ids, body cells as
//! `D`/`I`, `M`/`NM` or six-decimal reals. The corner cell is empty.

use std::path::Path;

use super::{write_bytes, ReportError};
use crate::alignment::Match;
use crate::dataset::{parse_track_id, TrackId};
use crate::permutation::Verdict;

pub trait GridCell {
    fn render(&self) -> String;
}

impl GridCell for Verdict {
    fn render(&self) -> String {
        self.token().to_string()
    }
}

impl GridCell for Match {
    fn render(&self) -> String {
        self.token().to_string()
    }
}

impl GridCell for f64 {
    fn render(&self) -> String {
        format!("{self:.6}")
    }
}

pub fn render_matrix_csv<C: GridCell>(order: &[TrackId], cells: &[C]) -> Result<String, ReportError> {
    let k = order.len();
    if cells.len() != k * k {
        return Err(ReportError::BadGrid { expected: k * k, found: cells.len() });
    }
    let mut out = String::new();
    for t in order {
        out.push(',');
        out.push_str(&t.to_string());
    }
    out.push('\n');
    for (i, t) in order.iter().enumerate() {
        out.push_str(&t.to_string());
        for c in &cells[i * k..(i + 1) * k] {
            out.push(',');
            out.push_str(&c.render());
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_matrix_csv<C: GridCell>(order: &[TrackId], cells: &[C], path: &Path) -> Result<(), ReportError> {
    write_bytes(path, render_matrix_csv(order, cells)?.as_bytes())
}

/// Reads a `D`/`I` grid written by [`emit_matrix_csv`] (or by hand).
pub fn parse_verdict_grid(text: &str) -> Result<(Vec<TrackId>, Vec<Verdict>), ReportError> {
    let bad = |msg: String| ReportError::MalformedGrid(msg);
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let order: Vec<TrackId> = header
        .split(',')
        .skip(1)
        .map(|c| parse_track_id(c.trim()).map_err(|e| bad(e.to_string())))
        .collect::<Result<_, _>>()?;
    let k = order.len();
    let mut cells = Vec::with_capacity(k * k);
    for (i, line) in lines.enumerate() {
        let mut parts = line.split(',').map(str::trim);
        let row_id = parts.next().unwrap_or_default();
        if order.get(i).map(|t| t.to_string()).as_deref() != Some(row_id) {
            return Err(bad(format!("row {} is labeled {row_id:?}", i + 1)));
        }
        let row: Vec<Verdict> = parts
            .map(|c| Verdict::from_token(c).ok_or_else(|| bad(format!("cell {c:?} is not D or I"))))
            .collect::<Result<_, _>>()?;
        if row.len() != k {
            return Err(bad(format!("row {row_id} has {} cells, expected {k}", row.len())));
        }
        cells.extend(row);
    }
    if cells.len() != k * k {
        return Err(ReportError::BadGrid { expected: k * k, found: cells.len() });
    }
    Ok((order, cells))
}

pub fn read_verdict_grid(path: &Path) -> Result<(Vec<TrackId>, Vec<Verdict>), ReportError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    parse_verdict_grid(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::{D, I};

    fn order(k: u32) -> Vec<TrackId> {
        (0..k).map(|v| TrackId::new(1, v).unwrap()).collect()
    }

    #[test]
    fn one_by_one_grid() {
        let text = render_matrix_csv(&order(1), &[I]).unwrap();
        assert_eq!(text, ",R1-V0\nR1-V0,I\n");
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split(',').count() == 2));
    }

    #[test]
    fn real_grid() {
        let text = render_matrix_csv(&order(2), &[1.0, 1.0 / 1001.0, 1.0 / 1001.0, 1.0]).unwrap();
        assert_eq!(text, ",R1-V0,R1-V1\nR1-V0,1.000000,0.000999\nR1-V1,0.000999,1.000000\n");
    }

    #[test]
    fn verdict_grids_round_trip() {
        let cells = vec![I, D, D, I];
        let text = render_matrix_csv(&order(2), &cells).unwrap();
        assert_eq!(parse_verdict_grid(&text).unwrap(), (order(2), cells));
        assert!(render_matrix_csv(&order(2), &[I]).is_err());
        assert!(parse_verdict_grid(",R1-V0,R1-V1\nR1-V0,I,X\nR1-V1,D,I\n").is_err());
        assert!(parse_verdict_grid(",R1-V0,R1-V1\nR1-V0,I,D\n").is_err());
        assert!(parse_verdict_grid(",R1-V0,R1-V1\nR1-V1,I,D\nR1-V0,D,I\n").is_err());
    }
}
