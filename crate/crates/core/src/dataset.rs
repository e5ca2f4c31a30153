//! Catalog of recordings, variations and human labels.
//!
//! Tracks follow the `R{r}-V{v}` naming scheme: `r >= 1` is the recording
//! (source excerpt) and `v >= 0` the variation, with `V0` always the original.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("malformed track name {0:?}, expected R<recording>-V<variation>")]
    MalformedTrackName(String),
    #[error("unknown congruence label {0:?}, expected one of A, M, HT, S, N")]
    UnknownLabel(String),
}

/// Identifier of one track, `R{recording}-V{variation}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId {
    recording: u32,
    variation: u32,
}

impl TrackId {
    pub fn new(recording: u32, variation: u32) -> Option<Self> {
        (recording >= 1).then_some(Self { recording, variation })
    }

    pub fn recording(&self) -> u32 {
        self.recording
    }

    pub fn variation(&self) -> u32 {
        self.variation
    }

    /// `V0` is the source track of its recording.
    pub fn is_original(&self) -> bool {
        self.variation == 0
    }
}

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}-V{}", self.recording, self.variation)
    }
}

/// Digits only, no sign, no leading zeros (except a lone `0`).
fn parse_index(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if s.len() > 1 && s.starts_with('0') {
        return None;
    }
    s.parse().ok()
}

/// Parses a bare track name such as `R12-V5`.
pub fn parse_track_id(name: &str) -> Result<TrackId, DatasetError> {
    let malformed = || DatasetError::MalformedTrackName(name.to_string());
    let rest = name.strip_prefix('R').ok_or_else(malformed)?;
    let (rec, var) = rest.split_once("-V").ok_or_else(malformed)?;
    let recording = parse_index(rec).ok_or_else(malformed)?;
    let variation = parse_index(var).ok_or_else(malformed)?;
    TrackId::new(recording, variation).ok_or_else(malformed)
}

impl FromStr for TrackId {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_track_id(s)
    }
}

impl Serialize for TrackId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrackId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Expert judgment of rhythmic congruence, ordered `N < S < HT < M < A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CongruenceLabel {
    /// Never congruent.
    Never,
    /// Sometimes.
    Sometimes,
    /// Half the time.
    HalfTheTime,
    /// Mostly.
    Mostly,
    /// Always congruent.
    Always,
}

impl CongruenceLabel {
    pub const ALL: [CongruenceLabel; 5] = [
        CongruenceLabel::Never,
        CongruenceLabel::Sometimes,
        CongruenceLabel::HalfTheTime,
        CongruenceLabel::Mostly,
        CongruenceLabel::Always,
    ];

    pub fn code(self) -> &'static str {
        match self {
            CongruenceLabel::Always => "A",
            CongruenceLabel::Mostly => "M",
            CongruenceLabel::HalfTheTime => "HT",
            CongruenceLabel::Sometimes => "S",
            CongruenceLabel::Never => "N",
        }
    }

    pub fn ordinal(self) -> u8 {
        match self {
            CongruenceLabel::Always => 4,
            CongruenceLabel::Mostly => 3,
            CongruenceLabel::HalfTheTime => 2,
            CongruenceLabel::Sometimes => 1,
            CongruenceLabel::Never => 0,
        }
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Self> {
        Self::ALL.get(usize::from(ordinal)).copied()
    }

    pub fn from_code(code: &str) -> Result<Self, DatasetError> {
        match code {
            "A" => Ok(CongruenceLabel::Always),
            "M" => Ok(CongruenceLabel::Mostly),
            "HT" => Ok(CongruenceLabel::HalfTheTime),
            "S" => Ok(CongruenceLabel::Sometimes),
            "N" => Ok(CongruenceLabel::Never),
            other => Err(DatasetError::UnknownLabel(other.to_string())),
        }
    }
}

impl fmt::Display for CongruenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CongruenceLabel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code(s)
    }
}

impl Serialize for CongruenceLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for CongruenceLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_code(&s).map_err(serde::de::Error::custom)
    }
}

/// All tracks known for a study, with their labels and file locations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    /// Recording index to its tracks, sorted by variation.
    pub recordings: BTreeMap<u32, Vec<TrackId>>,
    pub labels: BTreeMap<TrackId, CongruenceLabel>,
    pub audio_paths: BTreeMap<TrackId, PathBuf>,
    pub embedding_paths: BTreeMap<TrackId, PathBuf>,
    /// Non-fatal problems found while building the catalog (e.g. stray files).
    pub scan_warnings: Vec<String>,
}

impl Dataset {
    /// Inserts a track into the catalog, keeping variations sorted.
    pub fn add_track(&mut self, id: TrackId) {
        let tracks = self.recordings.entry(id.recording()).or_default();
        if let Err(pos) = tracks.binary_search(&id) {
            tracks.insert(pos, id);
        }
    }

    pub fn contains(&self, id: TrackId) -> bool {
        self.recordings
            .get(&id.recording())
            .is_some_and(|t| t.binary_search(&id).is_ok())
    }

    pub fn tracks(&self) -> impl Iterator<Item = TrackId> + '_ {
        self.recordings.values().flatten().copied()
    }

    /// Labels of one recording in variation order, `None` if any is missing.
    pub fn recording_labels(&self, recording: u32) -> Option<Vec<CongruenceLabel>> {
        self.recordings
            .get(&recording)?
            .iter()
            .map(|t| self.labels.get(t).copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "id")]
pub enum Subject {
    Dataset,
    Recording(u32),
    Track(TrackId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

/// Outcome of [`validate_dataset`]. The dataset is analyzable iff it holds no
/// error-severity issue.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, subject: Subject, message: String) {
        self.issues.push(Issue { severity, subject, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            let sev = match issue.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "{sev}: {}", issue.message)?;
        }
        Ok(())
    }
}

/// Checks that every recording can be analyzed and aligned.
///
/// Errors: variation gaps, recordings with fewer than two tracks, tracks
/// without an embedding, labels for tracks that are not in the catalog.
/// Warnings: unlabeled tracks and anything the directory scan flagged.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    for warning in &d.scan_warnings {
        report.push(Severity::Warning, Subject::Dataset, warning.clone());
    }

    for (&recording, tracks) in &d.recordings {
        let subject = Subject::Recording(recording);
        if tracks.len() < 2 {
            report.push(
                Severity::Error,
                subject,
                format!("recording {recording} has fewer than 2 tracks"),
            );
        }
        let last = tracks.last().map_or(0, |t| t.variation());
        for v in 0..=last {
            let id = TrackId { recording, variation: v };
            if tracks.binary_search(&id).is_err() {
                report.push(Severity::Error, Subject::Track(id), format!("variation gap at {id}"));
            }
        }
        for &id in tracks {
            if !d.embedding_paths.contains_key(&id) {
                let what = if d.labels.contains_key(&id) { "labeled track" } else { "track" };
                report.push(
                    Severity::Error,
                    Subject::Track(id),
                    format!("{what} {id} has no embedding"),
                );
            }
            if !d.labels.contains_key(&id) {
                report.push(Severity::Warning, Subject::Track(id), format!("track {id} is unlabeled"));
            }
        }
    }

    for &id in d.labels.keys() {
        if !d.contains(id) {
            report.push(
                Severity::Error,
                Subject::Track(id),
                format!("label for {id}, which is not in the catalog"),
            );
        }
    }

    report
}
