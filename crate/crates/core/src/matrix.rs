//! Frames × dims embedding matrix.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("matrix needs at least 1 dimension")]
    NoDimensions,
    #[error("data length {len} does not equal {frames} frames x {dims} dims")]
    ShapeMismatch { len: usize, frames: usize, dims: usize },
    #[error("non-finite value at frame {frame}, dim {dim}")]
    NonFinite { frame: usize, dim: usize },
}

/// One track's embedding: `frames` row vectors of length `dims`, stored
/// row-major. All entries are finite, `frames >= 2` and `dims >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    data: Vec<T>,
    frames: usize,
    dims: usize,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(data: Vec<T>, frames: usize, dims: usize) -> Result<Self, MatrixError> {
        if dims == 0 {
            return Err(MatrixError::NoDimensions);
        }
        if data.len() != frames * dims {
            return Err(MatrixError::ShapeMismatch { len: data.len(), frames, dims });
        }
        if frames < 2 {
            return Err(MatrixError::TooFewFrames(frames));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite { frame: pos / dims, dim: pos % dims });
        }
        Ok(Self { data, frames, dims })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let dims = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dims);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dims {
                return Err(MatrixError::ShapeMismatch {
                    len: data.len() + row.len(),
                    frames: rows.len(),
                    dims,
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), dims)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> {
        self.data.chunks_exact(self.dims)
    }

    pub fn column(&self, d: usize) -> Vec<T> {
        self.rows().map(|r| r[d]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &Self) -> Option<Self> {
        if self.dims != other.dims {
            return None;
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Some(Self { data, frames: self.frames + other.frames, dims: self.dims })
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, MatrixError> {
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.dims)
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            frames: self.frames,
            dims: self.dims,
        }
    }
}
