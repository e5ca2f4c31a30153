//! Loading a dataset from disk: directory scan, embedding matrices (CSV and
//! NPY), label files, PCM WAV audio, and a small frame-feature embedder.

use std::io;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::TrackId;
use crate::matrix::MatrixError;
use crate::permutation::splitmix64;
use crate::Matrix;

mod embedding_csv;
mod labels;
mod npy;
mod scan;
mod toy;
mod wav;

pub use embedding_csv::{load_embedding_csv, parse_embedding_csv, write_embedding_csv};
pub use labels::{load_labels, parse_labels, write_labels, LabelAssignment, LABELS_HEADER};
pub use npy::{encode_npy, load_embedding_npy, parse_npy, write_embedding_npy, NpyDtype};
pub use scan::{
    embeddings_dir, labels_path, load_track_embedding, recordings_dir, scan_recordings_dir,
};
pub use toy::{toy_embed, EPSILON};
pub use wav::{decode_wav, encode_wav_pcm16, parse_wav};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("empty file")]
    EmptyFile,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("non-numeric cell {text:?} at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, text: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("embedding needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("not an NPY file (bad magic)")]
    BadMagic,
    #[error("unsupported NPY version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("malformed NPY header: {0}")]
    MalformedHeader(String),
    #[error("unsupported dtype {0:?}, expected <f4 or <f8")]
    UnsupportedDtype(String),
    #[error("unsupported array rank {0}, expected 1 or 2")]
    UnsupportedRank(usize),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("line {line}: unknown label {code:?}")]
    UnknownLabel { line: usize, code: String },
    #[error("duplicate label for {0}")]
    DuplicateTrack(TrackId),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("not a RIFF/WAVE file")]
    BadRiffHeader,
    #[error("unsupported audio codec: {0}")]
    UnsupportedCodec(String),
    #[error("audio too short: {len} samples, need {needed}")]
    AudioTooShort { len: usize, needed: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|e| IngestError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    std::fs::write(path, bytes).map_err(|e| IngestError::io(path, e))
}

/// Mono audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Option<Self> {
        (!samples.is_empty() && sample_rate > 0).then_some(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Caps a track at `max_frames` rows by keeping a uniform random subset,
/// seeded from `master_seed` and the track id, in original frame order.
pub fn subsample_frames(matrix: Matrix, max_frames: usize, master_seed: u64, track: TrackId) -> Matrix {
    if matrix.frames() <= max_frames {
        return matrix;
    }
    let seed = splitmix64(
        splitmix64(master_seed ^ 0x5355_4253_414D_504C)
            ^ (u64::from(track.recording()) << 32 | u64::from(track.variation())),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = index::sample(&mut rng, matrix.frames(), max_frames).into_vec();
    keep.sort_unstable();
    matrix.select_rows(&keep).expect("max_frames >= 2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn subsample_is_deterministic_and_ordered() {
        let m = synth::gaussian_cluster(100, &[0.0, 0.0], 1.0, 4);
        let t = TrackId::new(1, 2).unwrap();
        let a = subsample_frames(m.clone(), 10, 7, t);
        assert_eq!(a.frames(), 10);
        assert_eq!(a, subsample_frames(m.clone(), 10, 7, t));
        assert_ne!(a, subsample_frames(m.clone(), 10, 8, t));
        let positions: Vec<usize> = a
            .rows()
            .map(|r| m.rows().position(|s| s == r).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample_frames(m.clone(), 100, 7, t), m);
    }
}
