//! Analysis reports and their file forms: canonical JSON, K×K CSV grids and
//! SVG rating scatters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{Match, MatchMatrix, RatingSeries, SamenessMatrix};
use crate::dataset::TrackId;
use crate::permutation::{AnalysisConfig, PairwiseResultMatrix, Verdict};

mod grid_csv;
mod json;
mod svg;

pub use grid_csv::{emit_matrix_csv, parse_verdict_grid, read_verdict_grid, render_matrix_csv, GridCell};
pub use json::{emit_report_json, parse_report_json, to_canonical_json};
pub use svg::{emit_scatter_svg, render_scatter_svg};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("rating series is empty")]
    EmptySeries,
    #[error("grid has {found} cells, expected {expected}")]
    BadGrid { expected: usize, found: usize },
    #[error("malformed grid CSV: {0}")]
    MalformedGrid(String),
    #[error("malformed report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    std::fs::write(path, bytes).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

/// Everything computed for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingReport {
    pub recording: u32,
    pub order: Vec<TrackId>,
    pub statistics: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
    pub model: Vec<Vec<Verdict>>,
    /// Present only when every track of the recording is labeled.
    pub human: Option<Vec<Vec<Verdict>>>,
    pub matches: Option<Vec<Vec<Match>>>,
    pub score_percent: Option<f64>,
    /// Bandwidth used per pair; `null` on the diagonal and for Wasserstein.
    pub gamma_used: Vec<Vec<Option<f64>>>,
    /// Pairs whose median distance was zero and fell back to `gamma = 1`.
    pub gamma_warnings: Vec<String>,
    pub n_effective_permutations: Vec<Vec<usize>>,
    /// Model classes are connected components of the model's `I` graph.
    pub ratings: Option<RatingSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub timestamp: String,
    pub config_echo: AnalysisConfig,
    pub per_recording: Vec<RecordingReport>,
    /// Mean of the per-recording scores that could be computed.
    pub dataset_average: Option<f64>,
}

pub(crate) fn to_rows<T: Copy>(cells: &[T], k: usize) -> Vec<Vec<T>> {
    cells.chunks(k.max(1)).map(<[T]>::to_vec).collect()
}

impl RecordingReport {
    pub fn new(
        results: &PairwiseResultMatrix,
        model: &SamenessMatrix,
        human: Option<&SamenessMatrix>,
        matched: Option<&MatchMatrix>,
        ratings: Option<RatingSeries>,
    ) -> Self {
        let k = results.size();
        Self {
            recording: results.recording,
            order: results.order.clone(),
            statistics: to_rows(&results.statistics(), k),
            p_values: to_rows(&results.p_values(), k),
            model: to_rows(&model.cells, k),
            human: human.map(|h| to_rows(&h.cells, k)),
            matches: matched.map(|m| to_rows(&m.cells, k)),
            score_percent: matched.map(|m| m.score_percent),
            gamma_used: to_rows(&results.cells.iter().map(|c| c.gamma_used).collect::<Vec<_>>(), k),
            gamma_warnings: results
                .degenerate_gamma_pairs()
                .into_iter()
                .map(|(a, b)| format!("{a}/{b}"))
                .collect(),
            n_effective_permutations: to_rows(
                &results.cells.iter().map(|c| c.n_effective_permutations).collect::<Vec<_>>(),
                k,
            ),
            ratings,
        }
    }

    pub fn flat<T: Copy>(rows: &[Vec<T>]) -> Vec<T> {
        rows.iter().flatten().copied().collect()
    }
}

/// File names inside an output directory.
pub mod names {
    pub const REPORT_JSON: &str = "report.json";

    pub fn pvalues(recording: u32) -> String {
        format!("R{recording}_pvalues.csv")
    }
    pub fn model(recording: u32) -> String {
        format!("R{recording}_model.csv")
    }
    pub fn human(recording: u32) -> String {
        format!("R{recording}_human.csv")
    }
    pub fn matches(recording: u32) -> String {
        format!("R{recording}_match.csv")
    }
    pub fn ratings(recording: u32) -> String {
        format!("R{recording}_ratings.svg")
    }
}

/// Writes the p-value and model D/I grids of one recording.
pub fn emit_analysis_files(rec: &RecordingReport, out: &Path) -> Result<(), ReportError> {
    emit_matrix_csv(&rec.order, &RecordingReport::flat(&rec.p_values), &out.join(names::pvalues(rec.recording)))?;
    emit_matrix_csv(&rec.order, &RecordingReport::flat(&rec.model), &out.join(names::model(rec.recording)))
}

/// Writes the human, match and rating files of one recording, when present.
pub fn emit_alignment_files(rec: &RecordingReport, out: &Path) -> Result<(), ReportError> {
    if let Some(human) = &rec.human {
        emit_matrix_csv(&rec.order, &RecordingReport::flat(human), &out.join(names::human(rec.recording)))?;
    }
    if let Some(matches) = &rec.matches {
        emit_matrix_csv(&rec.order, &RecordingReport::flat(matches), &out.join(names::matches(rec.recording)))?;
    }
    if let Some(ratings) = &rec.ratings {
        emit_scatter_svg(ratings, &out.join(names::ratings(rec.recording)))?;
    }
    Ok(())
}

/// `report.json` plus every per-recording file.
pub fn emit_report_tree(report: &AnalysisReport, out: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.to_path_buf(), source })?;
    for rec in &report.per_recording {
        emit_analysis_files(rec, out)?;
        emit_alignment_files(rec, out)?;
    }
    emit_report_json(report, &out.join(names::REPORT_JSON))
}
