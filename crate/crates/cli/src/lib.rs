//! The `embalign` command line.
//!
//! ```text
//! embalign scan    --root DATA             catalog and validate a dataset
//! embalign embed   --root DATA             toy embeddings for WAVs that lack one
//! embalign analyze --root DATA --seed 42   pairwise p-value and D/I grids
//! embalign align   --root DATA             match grids and alignment scores
//! embalign report  --root DATA             everything, plus report.json
//! embalign serve   --root DATA             HTTP backend for the UI
//! ```
//!
//! Exit status: 0 on success, 1 when the dataset fails validation, 2 for
//! usage and runtime errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};
use embalign_core::alignment::{
    self, equivalence_classes, format_percent, human_sameness_matrix, match_matrix, rating_plot_data,
};
use embalign_core::dataset::validate_dataset;
use embalign_core::ingest::{
    decode_wav, embeddings_dir, labels_path, load_labels, scan_recordings_dir, toy_embed, write_embedding_csv,
};
use embalign_core::pipeline::{self, analyze_dataset, run_analysis, PipelineError, RunOptions};
use embalign_core::report::{self, emit_matrix_csv, emit_report_tree, emit_scatter_svg, names, read_verdict_grid};
use embalign_core::{CongruenceLabel, Dataset, SamenessMatrix, SamenessSource, TrackId, Verdict};

pub mod settings;

use settings::{Flags, Settings};

#[derive(Debug, Parser)]
#[command(name = "embalign", version, about = "Check how well embedding-based similarity tests agree with human labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Catalog the dataset and print validation issues
    Scan,
    /// Compute toy spectral embeddings for tracks that have audio but no embedding
    Embed,
    /// Run the pairwise permutation tests and write p-value and D/I grids
    Analyze,
    /// Compare model grids with the human labels and print alignment scores
    Align,
    /// Run the whole pipeline and write report.json with every grid and plot
    Report,
    /// Serve the HTTP API (and the UI, with --ui-dir)
    Serve,
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Validation(report) => CliError::Validation(format!("dataset has validation errors:\n{report}")),
            other => runtime(other),
        }
    }
}

/// Runs one command line, writing normal output to `out` and diagnostics to
/// `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = Settings::resolve(cli.flags).map_err(CliError::Runtime).and_then(|s| dispatch(cli.command, &s, out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Scan => scan(s, out),
        Command::Embed => embed(s, out),
        Command::Analyze => analyze(s, out),
        Command::Align => align(s, out),
        Command::Report => report_cmd(s, out),
        Command::Serve => serve(s, out),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text).and_then(|()| out.write_all(b"\n")).map_err(runtime)
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { say($out, format_args!($($arg)*)) };
}

fn load_dataset(s: &Settings) -> Result<Dataset, CliError> {
    scan_recordings_dir(&s.root).map_err(runtime)
}

/// `--timestamp`, else `SOURCE_DATE_EPOCH`, else the current time.
pub fn report_timestamp(explicit: Option<&str>) -> Result<String, CliError> {
    if let Some(t) = explicit {
        return Ok(t.to_string());
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(epoch) => {
            let secs: i64 = epoch.trim().parse().map_err(|_| runtime(format!("SOURCE_DATE_EPOCH={epoch:?} is not an integer")))?;
            let t = chrono::DateTime::from_timestamp(secs, 0).ok_or_else(|| runtime("SOURCE_DATE_EPOCH out of range"))?;
            Ok(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        }
        Err(_) => Ok(pipeline::now_rfc3339()),
    }
}

fn create_out(s: &Settings) -> Result<(), CliError> {
    std::fs::create_dir_all(&s.out).map_err(|e| runtime(format!("{}: {e}", s.out.display())))
}

fn scan(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let d = load_dataset(s)?;
    let tracks = d.tracks().count();
    say!(
        out,
        "{} recordings, {tracks} tracks ({} with audio, {} with embeddings, {} labeled)",
        d.recordings.len(),
        d.audio_paths.len(),
        d.embedding_paths.len(),
        d.labels.len()
    )?;
    for (r, ids) in &d.recordings {
        let cells: Vec<String> = ids
            .iter()
            .map(|id| format!("V{} {}", id.variation(), d.labels.get(id).map_or("-", |l| l.code())))
            .collect();
        say!(out, "R{r}: {}", cells.join(", "))?;
    }
    let v = validate_dataset(&d);
    if v.is_empty() {
        say!(out, "no issues")?;
    } else {
        write!(out, "{v}").map_err(runtime)?;
    }
    if v.has_errors() {
        return Err(CliError::Validation(format!("{} validation error(s)", v.errors().count())));
    }
    Ok(())
}

fn embed(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let d = load_dataset(s)?;
    let dir = embeddings_dir(&s.root);
    let mut done = 0;
    for (&id, wav) in &d.audio_paths {
        if d.embedding_paths.contains_key(&id) {
            continue;
        }
        let audio = decode_wav(wav).map_err(|e| runtime(format!("{id}: {e}")))?;
        let m = toy_embed(&audio, s.frame_size, s.hop).map_err(|e| runtime(format!("{id}: {e}")))?;
        std::fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{id}.csv"));
        write_embedding_csv(&m, &path).map_err(runtime)?;
        say!(out, "{id}: {} frames x {} dims -> {}", m.frames(), m.dims(), path.display())?;
        done += 1;
    }
    if done == 0 {
        say!(out, "every track with audio already has an embedding")?;
    }
    Ok(())
}

fn analyze(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.analysis.validate().map_err(runtime)?;
    let d = load_dataset(s)?;
    let options = RunOptions { threads: s.threads, progress: None };
    let matrices = analyze_dataset(&d, &s.analysis, &options)?;
    create_out(s)?;
    for m in &matrices {
        let model = alignment::model_sameness_matrix(m, s.analysis.alpha);
        emit_matrix_csv(&m.order, &m.p_values(), &s.out.join(names::pvalues(m.recording))).map_err(runtime)?;
        emit_matrix_csv(&m.order, &model.cells, &s.out.join(names::model(m.recording))).map_err(runtime)?;
        let k = m.size();
        let distinct = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).filter(|&(i, j)| model.get(i, j) == Verdict::D).count();
        say!(out, "R{}: {} pairs, {distinct} distinguishable at alpha {}", m.recording, k * (k - 1) / 2, s.analysis.alpha)?;
        for (a, b) in m.degenerate_gamma_pairs() {
            say!(out, "  warning: {a}/{b} has zero median distance; used gamma = 1")?;
        }
    }
    say!(out, "wrote {}", s.out.display())
}

/// Human and match grids plus the rating plot for one recording; returns the
/// score.
fn align_one(
    model: &SamenessMatrix,
    labels: &BTreeMap<TrackId, CongruenceLabel>,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<Option<f64>, CliError> {
    let recording = model.order[0].recording();
    let per_track: Vec<Option<CongruenceLabel>> = model.order.iter().map(|t| labels.get(t).copied()).collect();
    if let Some(i) = per_track.iter().position(Option::is_none) {
        say!(out, "R{recording}: {} is unlabeled; skipped", model.order[i])?;
        return Ok(None);
    }
    let human = human_sameness_matrix(&model.order, &per_track).map_err(runtime)?;
    let matched = match_matrix(&human, model).map_err(runtime)?;
    let all: Vec<CongruenceLabel> = per_track.into_iter().flatten().collect();
    let ratings = rating_plot_data(&model.order, &all, &equivalence_classes(model)).map_err(runtime)?;
    emit_matrix_csv(&model.order, &human.cells, &out_dir.join(names::human(recording))).map_err(runtime)?;
    emit_matrix_csv(&model.order, &matched.cells, &out_dir.join(names::matches(recording))).map_err(runtime)?;
    emit_scatter_svg(&ratings, &out_dir.join(names::ratings(recording))).map_err(runtime)?;
    let k = model.size();
    for i in 0..k {
        let row: Vec<&str> = (0..k).map(|j| matched.get(i, j).token()).collect();
        say!(out, "  {}  {}", model.order[i], row.join(" "))?;
    }
    say!(out, "R{recording} alignment: {}%", format_percent(matched.score_percent))?;
    Ok(Some(matched.score_percent))
}

fn read_model(path: &Path) -> Result<SamenessMatrix, CliError> {
    let (order, cells) = read_verdict_grid(path).map_err(runtime)?;
    let first = order.first().ok_or_else(|| runtime(format!("{}: empty grid", path.display())))?;
    if let Some(other) = order.iter().find(|t| t.recording() != first.recording()) {
        return Err(runtime(format!("{}: {other} and {first} belong to different recordings", path.display())));
    }
    SamenessMatrix::new(order, cells, SamenessSource::Model).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn print_average(scores: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    if scores.len() > 1 {
        let avg = alignment::average_alignment(scores).map_err(runtime)?;
        say!(out, "dataset alignment: {}%", format_percent(avg))?;
    }
    Ok(())
}

fn align(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    create_out(s)?;
    if let Some(grid) = &s.model_matrix {
        let model = read_model(grid)?;
        let labels_file = labels_path(&s.root);
        let labels = load_labels(&labels_file).map_err(runtime)?.into_map();
        return match align_one(&model, &labels, &s.out, out)? {
            Some(_) => Ok(()),
            None => Err(CliError::Validation("every track in the model grid needs a label".into())),
        };
    }
    let d = load_dataset(s)?;
    let v = validate_dataset(&d);
    if v.has_errors() {
        return Err(CliError::Validation(format!("dataset has validation errors:\n{v}")));
    }
    let mut scores = Vec::new();
    for &r in d.recordings.keys() {
        let path = s.out.join(names::model(r));
        if !path.is_file() {
            return Err(runtime(format!("{} not found; run `embalign analyze` first", path.display())));
        }
        let model = read_model(&path)?;
        if model.order != d.recordings[&r] {
            return Err(runtime(format!("{} does not list the tracks of R{r}", path.display())));
        }
        scores.extend(align_one(&model, &d.labels, &s.out, out)?);
    }
    print_average(&scores, out)
}

fn report_cmd(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.analysis.validate().map_err(runtime)?;
    let d = load_dataset(s)?;
    let timestamp = report_timestamp(s.timestamp.as_deref())?;
    let options = RunOptions { threads: s.threads, progress: None };
    let report = run_analysis(&d, &s.analysis, &options, timestamp)?;
    emit_report_tree(&report, &s.out).map_err(runtime)?;
    let mut scores = Vec::new();
    for rec in &report.per_recording {
        match rec.score_percent {
            Some(score) => {
                say!(out, "R{} alignment: {}%", rec.recording, format_percent(score))?;
                scores.push(score);
            }
            None => say!(out, "R{}: not fully labeled; no alignment score", rec.recording)?,
        }
    }
    print_average(&scores, out)?;
    say!(out, "wrote {}", s.out.join(report::names::REPORT_JSON).display())
}

fn serve(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    if !s.root.is_dir() {
        return Err(runtime(format!("{}: dataset root is not a directory", s.root.display())));
    }
    let config = embalign_service::ServiceConfig {
        root: s.root.clone(),
        ui_dir: s.ui_dir.clone(),
        workers: s.workers,
        threads: s.threads,
        timestamp: report_timestamp(s.timestamp.as_deref())?,
    };
    say!(out, "serving {} at http://127.0.0.1:{}", s.root.display(), s.port)?;
    out.flush().map_err(runtime)?;
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(embalign_service::serve(config, s.port)).map_err(runtime)
}
