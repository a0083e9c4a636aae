//! On-disk formats: binary tensors, network weights, point clouds, PGM
//! previews, and the line-oriented config grammar.
//!
//! All binary formats are little-endian with `f32` payloads, independent of
//! the scalar type used in memory.

pub mod cloud;
pub mod config;
pub mod pgm;
pub mod tensor;

pub use cloud::{cloud_to_points, points_to_cloud_rows, read_cloud_file, write_cloud_file};
pub use config::{parse_config, validate_schema, ConfigError, ConfigFile, ConfigValue};
pub use pgm::write_pgm;
pub use tensor::{read_tensor, read_weights, write_tensor, write_weights, TensorData, WeightsFile};

use thiserror::Error;

/// Malformed or unwritable binary file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype tag {0} (only 1 = float32)")]
    UnsupportedDtype(u32),
    #[error("file truncated: needed {needed} more bytes for {context}")]
    Truncated { needed: usize, context: &'static str },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("invalid dimensions {dims:?}: {reason}")]
    BadDims { dims: Vec<usize>, reason: &'static str },
    #[error("tensor rank {0} out of supported range 1..=8")]
    BadRank(u32),
    #[error("invalid entry name: {0}")]
    BadName(String),
    #[error("duplicate weights entry {0:?}")]
    DuplicateEntry(String),
    #[error("cloud file length {0} is not a multiple of 16 (x, y, z, intensity as f32)")]
    RaggedCloud(u64),
    #[error("grid value {value} at ({row}, {col}) outside [0, 1]")]
    PixelRange { row: usize, col: usize, value: f64 },
    #[error("expected shape {expected}, found {found:?}")]
    WrongShape { expected: &'static str, found: Vec<usize> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Little-endian byte cursor shared by the binary readers.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, at: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }

    pub(crate) fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated {
                needed: n - self.remaining(),
                context,
            });
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    pub(crate) fn u32(&mut self, context: &'static str) -> Result<u32, FormatError> {
        let b = self.take(4, context)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let b = self.take(4, "magic")?;
        let found = [b[0], b[1], b[2], b[3]];
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        Ok(())
    }
}
