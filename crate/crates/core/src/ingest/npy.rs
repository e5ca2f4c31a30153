//! NPY array files: `\x93NUMPY`, version, little-endian header length, an
//! ASCII Python dict literal padded with spaces and a trailing `\n` so the
//! data starts on a 64-byte boundary, then the raw array.

use std::path::Path;

use super::{read_file, write_file, IngestError};
use crate::Matrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpyDtype {
    F4,
    F8,
}

impl NpyDtype {
    fn descr(self) -> &'static str {
        match self {
            NpyDtype::F4 => "<f4",
            NpyDtype::F8 => "<f8",
        }
    }

    fn width(self) -> usize {
        match self {
            NpyDtype::F4 => 4,
            NpyDtype::F8 => 8,
        }
    }
}

#[derive(Debug, PartialEq)]
struct Header {
    dtype: NpyDtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Minimal reader for the dict literal numpy writes, e.g.
/// `{'descr': '<f8', 'fortran_order': False, 'shape': (3, 2), }`.
struct DictParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> DictParser<'a> {
    fn err(&self, what: &str) -> IngestError {
        IngestError::MalformedHeader(format!("{what} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), IngestError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn string(&mut self) -> Result<&'a str, IngestError> {
        self.skip_ws();
        let quote = match self.s.get(self.pos) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        let start = self.pos + 1;
        let len = self.s[start..]
            .iter()
            .position(|&b| b == quote)
            .ok_or_else(|| self.err("unterminated string"))?;
        self.pos = start + len + 1;
        std::str::from_utf8(&self.s[start..start + len]).map_err(|_| self.err("non-ASCII string"))
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn boolean(&mut self) -> Result<bool, IngestError> {
        match self.word() {
            "True" => Ok(true),
            "False" => Ok(false),
            _ => Err(self.err("expected True or False")),
        }
    }

    fn shape(&mut self) -> Result<Vec<usize>, IngestError> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if self.eat(b')') {
                return Ok(dims);
            }
            let w = self.word();
            let d: usize = w.parse().map_err(|_| self.err("expected dimension"))?;
            dims.push(d);
            if !self.eat(b',') {
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }

    fn header(mut self) -> Result<Header, IngestError> {
        let (mut descr, mut fortran_order, mut shape) = (None, None, None);
        self.expect(b'{')?;
        loop {
            if self.eat(b'}') {
                break;
            }
            let key = self.string()?;
            self.expect(b':')?;
            match key {
                "descr" => descr = Some(self.string()?),
                "fortran_order" => fortran_order = Some(self.boolean()?),
                "shape" => shape = Some(self.shape()?),
                other => return Err(self.err(&format!("unexpected key {other:?}"))),
            }
            if !self.eat(b',') {
                self.expect(b'}')?;
                break;
            }
        }
        let descr = descr.ok_or_else(|| IngestError::MalformedHeader("missing 'descr'".into()))?;
        let dtype = match descr {
            "<f4" => NpyDtype::F4,
            "<f8" => NpyDtype::F8,
            other => return Err(IngestError::UnsupportedDtype(other.to_string())),
        };
        Ok(Header {
            dtype,
            fortran_order: fortran_order
                .ok_or_else(|| IngestError::MalformedHeader("missing 'fortran_order'".into()))?,
            shape: shape.ok_or_else(|| IngestError::MalformedHeader("missing 'shape'".into()))?,
        })
    }
}

/// Decodes an NPY v1.0 (or 2.0) little-endian float array as an embedding
/// matrix. 1-D arrays of length `n` become `n x 1`.
pub fn parse_npy(bytes: &[u8]) -> Result<Matrix, IngestError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IngestError::BadMagic);
    }
    let truncated = |expected| IngestError::TruncatedData { expected, found: bytes.len() };
    if bytes.len() < 8 {
        return Err(truncated(8));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, prefix) = match major {
        1 => {
            if bytes.len() < 10 {
                return Err(truncated(10));
            }
            (usize::from(u16::from_le_bytes([bytes[8], bytes[9]])), 10)
        }
        2 => {
            if bytes.len() < 12 {
                return Err(truncated(12));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]);
            (len as usize, 12)
        }
        _ => return Err(IngestError::UnsupportedVersion(major, minor)),
    };
    let data_start = prefix + header_len;
    if bytes.len() < data_start {
        return Err(truncated(data_start));
    }
    let header = DictParser { s: &bytes[prefix..data_start], pos: 0 }.header()?;

    let (frames, dims) = match header.shape.as_slice() {
        [n] => (*n, 1),
        [r, c] => (*r, *c),
        other => return Err(IngestError::UnsupportedRank(other.len())),
    };
    let count = frames * dims;
    let width = header.dtype.width();
    let expected = data_start + count * width;
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    let raw = &bytes[data_start..expected];
    let values: Vec<f64> = match header.dtype {
        NpyDtype::F4 => raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect(),
        NpyDtype::F8 => raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    };
    let data = if header.fortran_order && dims > 1 {
        let mut row_major = vec![0.0; count];
        for c in 0..dims {
            for r in 0..frames {
                row_major[r * dims + c] = values[c * frames + r];
            }
        }
        row_major
    } else {
        values
    };
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(IngestError::NonFinite { row: pos / dims.max(1), col: pos % dims.max(1) });
    }
    if frames < 2 {
        return Err(IngestError::TooFewFrames(frames));
    }
    Ok(Matrix::new(data, frames, dims)?)
}

pub fn load_embedding_npy(path: &Path) -> Result<Matrix, IngestError> {
    parse_npy(&read_file(path)?)
}

/// Encodes `matrix` as an NPY v1.0 file. `F4` narrows each value to `f32`.
pub fn encode_npy(matrix: &Matrix, dtype: NpyDtype, fortran_order: bool) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': {}, 'shape': ({}, {}), }}",
        dtype.descr(),
        if fortran_order { "True" } else { "False" },
        matrix.frames(),
        matrix.dims()
    );
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    let header_len = dict.len() + padding + 1;
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header_len + matrix.as_slice().len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', padding));
    out.push(b'\n');

    let (frames, dims) = (matrix.frames(), matrix.dims());
    let value_at = |k: usize| {
        if fortran_order {
            matrix.as_slice()[(k % frames) * dims + k / frames]
        } else {
            matrix.as_slice()[k]
        }
    };
    for k in 0..frames * dims {
        let v = value_at(k);
        match dtype {
            NpyDtype::F4 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            NpyDtype::F8 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

pub fn write_embedding_npy(
    matrix: &Matrix,
    path: &Path,
    dtype: NpyDtype,
    fortran_order: bool,
) -> Result<(), IngestError> {
    write_file(path, &encode_npy(matrix, dtype, fortran_order))
}
