use std::path::{Path, PathBuf};

use super::{load_embedding_csv, load_embedding_npy, load_labels, IngestError};
use crate::dataset::{parse_track_id, Dataset, TrackId};
use crate::Matrix;

pub fn recordings_dir(root: &Path) -> PathBuf {
    root.join("Data").join("Recordings")
}

pub fn embeddings_dir(root: &Path) -> PathBuf {
    root.join("Data").join("Embeddings")
}

pub fn labels_path(root: &Path) -> PathBuf {
    root.join("Data").join("labels.csv")
}

/// Regular files in `dir`, sorted by name; a missing directory is empty.
fn list_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(IngestError::io(dir, e)),
    };
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| IngestError::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn classify(path: &Path, allowed: &[&str], warnings: &mut Vec<String>) -> Option<(TrackId, String)> {
    let name = path.file_name()?.to_string_lossy().into_owned();
    let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
    let Some(ext) = ext.filter(|e| allowed.contains(&e.as_str())) else {
        warnings.push(format!("ignored {name}: not a {} file", allowed.join("/")));
        return None;
    };
    let stem = path.file_stem()?.to_string_lossy();
    match parse_track_id(&stem) {
        Ok(id) => Some((id, ext)),
        Err(e) => {
            warnings.push(format!("ignored {name}: {e}"));
            None
        }
    }
}

/// Catalogs `<root>/Data/Recordings/*.wav`, `<root>/Data/Embeddings/*.{csv,npy}`
/// and `<root>/Data/labels.csv`. Unparseable file names become warnings.
pub fn scan_recordings_dir(root: &Path) -> Result<Dataset, IngestError> {
    let meta = std::fs::metadata(root).map_err(|e| IngestError::io(root, e))?;
    if !meta.is_dir() {
        return Err(IngestError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "dataset root is not a directory"),
        ));
    }
    let mut d = Dataset::default();

    for path in list_files(&recordings_dir(root))? {
        if let Some((id, _)) = classify(&path, &["wav"], &mut d.scan_warnings) {
            d.add_track(id);
            d.audio_paths.insert(id, path);
        }
    }

    for path in list_files(&embeddings_dir(root))? {
        if let Some((id, ext)) = classify(&path, &["csv", "npy"], &mut d.scan_warnings) {
            d.add_track(id);
            // Files are visited in name order, so .npy replaces .csv.
            if let Some(prev) = d.embedding_paths.insert(id, path) {
                if ext == "npy" {
                    d.scan_warnings.push(format!(
                        "{id} has both CSV and NPY embeddings; using NPY, ignoring {}",
                        prev.display()
                    ));
                }
            }
        }
    }

    let labels = labels_path(root);
    if labels.is_file() {
        d.labels = load_labels(&labels)?.into_map();
    }
    Ok(d)
}

/// Loads one track's embedding, dispatching on the file extension.
pub fn load_track_embedding(path: &Path) -> Result<Matrix, IngestError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("npy") => load_embedding_npy(path),
        _ => load_embedding_csv(path),
    }
}
