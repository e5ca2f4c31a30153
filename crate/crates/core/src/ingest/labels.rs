use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use super::{read_file, IngestError};
use crate::dataset::{CongruenceLabel, TrackId};

pub const LABELS_HEADER: &str = "recording,variation,label";

/// Human labels, at most one per track.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelAssignment {
    entries: BTreeMap<TrackId, CongruenceLabel>,
}

impl LabelAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (TrackId, CongruenceLabel)>,
    ) -> Result<Self, IngestError> {
        let mut out = Self::new();
        for (track, label) in entries {
            if out.entries.insert(track, label).is_some() {
                return Err(IngestError::DuplicateTrack(track));
            }
        }
        Ok(out)
    }

    pub fn get(&self, track: TrackId) -> Option<CongruenceLabel> {
        self.entries.get(&track).copied()
    }

    /// Sets or replaces a label, returning the previous one.
    pub fn set(&mut self, track: TrackId, label: CongruenceLabel) -> Option<CongruenceLabel> {
        self.entries.insert(track, label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TrackId, CongruenceLabel)> + '_ {
        self.entries.iter().map(|(t, l)| (*t, *l))
    }

    pub fn into_map(self) -> BTreeMap<TrackId, CongruenceLabel> {
        self.entries
    }

    /// CSV text with the `recording,variation,label` header, sorted by track.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LABELS_HEADER);
        out.push('\n');
        for (t, l) in self.iter() {
            out.push_str(&format!("{},{},{}\n", t.recording(), t.variation(), l.code()));
        }
        out
    }
}

pub fn parse_labels(text: &str) -> Result<LabelAssignment, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, header)) if header.trim() == LABELS_HEADER => {}
        Some((line, header)) => {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected header {LABELS_HEADER:?}, found {header:?}"),
            })
        }
        None => return Err(IngestError::EmptyFile),
    }
    let mut out = LabelAssignment::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let [rec, var, code] = cells[..] else {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 cells, found {}", cells.len()),
            });
        };
        let malformed = |what: &str| IngestError::MalformedRow { line, reason: format!("bad {what}") };
        let recording: u32 = rec.parse().map_err(|_| malformed("recording"))?;
        let variation: u32 = var.parse().map_err(|_| malformed("variation"))?;
        let track = TrackId::new(recording, variation).ok_or_else(|| malformed("recording"))?;
        let label = CongruenceLabel::from_code(code)
            .map_err(|_| IngestError::UnknownLabel { line, code: code.to_string() })?;
        if out.set(track, label).is_some() {
            return Err(IngestError::DuplicateTrack(track));
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<LabelAssignment, IngestError> {
    let bytes = read_file(path)?;
    parse_labels(&String::from_utf8_lossy(&bytes))
}

/// Replaces `path` atomically: write and sync a sibling temp file, then
/// rename it over the original.
pub fn write_labels(labels: &LabelAssignment, path: &Path) -> Result<(), IngestError> {
    let tmp = path.with_extension("csv.tmp");
    let write = || -> std::io::Result<()> {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(labels.to_csv().as_bytes())?;
        file.sync_all()
    };
    write().map_err(|e| IngestError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| IngestError::io(path, e))
}
