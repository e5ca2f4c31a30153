//! End to end: load a validated dataset, test every pair of every recording,
//! compare with the human labels, assemble the report.
//!
//! The command-line tool and the HTTP service both go through
//! [`run_analysis`], so equal inputs give equal reports.

use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

use crate::alignment::{self, AlignmentError};
use crate::dataset::{validate_dataset, Dataset, TrackId, ValidationReport};
use crate::ingest::{self, IngestError};
use crate::permutation::{self, AnalysisConfig, ConfigError, PairwiseResultMatrix, PermutationError};
use crate::report::{AnalysisReport, RecordingReport};
use crate::{Matrix, TOOL_VERSION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset has validation errors:\n{0}")]
    Validation(ValidationReport),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{track}: {source}")]
    Ingest {
        track: TrackId,
        #[source]
        source: IngestError,
    },
    #[error("recording {recording}: {source}")]
    Permutation {
        recording: u32,
        #[source]
        source: PermutationError,
    },
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Execution knobs that do not affect the numbers.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads for pair tests; `None` uses all logical cores.
    pub threads: Option<usize>,
    /// Called with `(completed_pairs, total_pairs)` after every test.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

/// Current UTC time as RFC 3339 with second precision.
pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Number of pair tests an analysis of `dataset` runs.
pub fn total_pairs(dataset: &Dataset) -> usize {
    dataset.recordings.values().map(|t| t.len() * t.len().saturating_sub(1) / 2).sum()
}

/// Loads every track of `recording`, capped at `cfg.max_frames` frames.
pub fn load_recording(dataset: &Dataset, recording: u32, cfg: &AnalysisConfig) -> Result<Vec<(TrackId, Matrix)>, PipelineError> {
    let tracks = dataset.recordings.get(&recording).map(Vec::as_slice).unwrap_or_default();
    tracks
        .iter()
        .map(|&track| {
            let path = dataset.embedding_paths.get(&track).ok_or_else(|| PipelineError::Ingest {
                track,
                source: IngestError::MalformedHeader("no embedding file".into()),
            })?;
            let m = ingest::load_track_embedding(path).map_err(|source| PipelineError::Ingest { track, source })?;
            Ok((track, ingest::subsample_frames(m, cfg.max_frames, cfg.master_seed, track)))
        })
        .collect()
}

/// Pairwise test matrices for every recording, in recording order.
pub fn analyze_dataset(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    options: &RunOptions<'_>,
) -> Result<Vec<PairwiseResultMatrix>, PipelineError> {
    cfg.validate()?;
    let validation = validate_dataset(dataset);
    if validation.has_errors() {
        return Err(PipelineError::Validation(validation));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| PipelineError::ThreadPool(e.to_string()))?;

    let total = total_pairs(dataset);
    let done = AtomicUsize::new(0);
    let tick = || {
        let completed = done.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(progress) = options.progress {
            progress(completed, total);
        }
    };

    let mut out = Vec::with_capacity(dataset.recordings.len());
    for &recording in dataset.recordings.keys() {
        let tracks = load_recording(dataset, recording, cfg)?;
        let matrix = pool
            .install(|| permutation::pairwise_matrix_with_progress(&tracks, cfg, &tick))
            .map_err(|source| PipelineError::Permutation { recording, source })?;
        out.push(matrix);
    }
    Ok(out)
}

/// Alignment against the dataset's labels for already computed matrices.
/// Recordings that are not fully labeled get no human/match grids and do
/// not enter the dataset average.
pub fn build_report(
    dataset: &Dataset,
    matrices: &[PairwiseResultMatrix],
    cfg: &AnalysisConfig,
    timestamp: String,
) -> Result<AnalysisReport, PipelineError> {
    let mut per_recording = Vec::with_capacity(matrices.len());
    let mut scores = Vec::new();
    for results in matrices {
        per_recording.push(align_recording(dataset, results, cfg.alpha)?);
        if let Some(score) = per_recording.last().and_then(|r| r.score_percent) {
            scores.push(score);
        }
    }
    Ok(AnalysisReport {
        tool_version: TOOL_VERSION.to_string(),
        timestamp,
        config_echo: *cfg,
        per_recording,
        dataset_average: alignment::average_alignment(&scores).ok(),
    })
}

pub fn align_recording(dataset: &Dataset, results: &PairwiseResultMatrix, alpha: f64) -> Result<RecordingReport, PipelineError> {
    let model = alignment::model_sameness_matrix(results, alpha);
    let labels: Vec<_> = results.order.iter().map(|t| dataset.labels.get(t).copied()).collect();
    if labels.iter().any(Option::is_none) {
        return Ok(RecordingReport::new(results, &model, None, None, None));
    }
    let human = alignment::human_sameness_matrix(&results.order, &labels)?;
    let matched = alignment::match_matrix(&human, &model)?;
    let labels: Vec<_> = labels.into_iter().flatten().collect();
    let classes = alignment::equivalence_classes(&model);
    let ratings = alignment::rating_plot_data(&results.order, &labels, &classes)?;
    Ok(RecordingReport::new(results, &model, Some(&human), Some(&matched), Some(ratings)))
}

/// [`analyze_dataset`] followed by [`build_report`].
pub fn run_analysis(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    options: &RunOptions<'_>,
    timestamp: String,
) -> Result<AnalysisReport, PipelineError> {
    let matrices = analyze_dataset(dataset, cfg, options)?;
    build_report(dataset, &matrices, cfg, timestamp)
}
