use std::path::PathBuf;
use std::sync::Mutex;

use embalign_core::ingest::{load_labels, write_labels, IngestError, LabelAssignment};
use embalign_core::{CongruenceLabel, TrackId};

/// Labels backed by `Data/labels.csv`. Writers take turns; each mutation
/// reloads the file, applies the change and rewrites it before returning.
#[derive(Debug)]
pub struct LabelStore {
    path: PathBuf,
    writer: Mutex<()>,
}

impl LabelStore {
    pub fn new(path: PathBuf) -> Self {
        Self { path, writer: Mutex::new(()) }
    }

    pub fn path(&self) -> &std::path::Path {
        &self.path
    }

    fn read(&self) -> Result<LabelAssignment, IngestError> {
        if self.path.is_file() {
            load_labels(&self.path)
        } else {
            Ok(LabelAssignment::new())
        }
    }

    pub fn load(&self) -> Result<LabelAssignment, IngestError> {
        let _turn = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        self.read()
    }

    /// Sets one label and persists the whole assignment.
    pub fn set(&self, track: TrackId, label: CongruenceLabel) -> Result<LabelAssignment, IngestError> {
        let _turn = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut labels = self.read()?;
        if labels.get(track) != Some(label) {
            labels.set(track, label);
            if let Some(dir) = self.path.parent() {
                // A failure here resurfaces as the write error below.
                let _ = std::fs::create_dir_all(dir);
            }
            write_labels(&labels, &self.path)?;
        }
        Ok(labels)
    }
}
