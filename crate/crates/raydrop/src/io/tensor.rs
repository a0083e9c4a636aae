//! Binary tensor ("RTNS") and named-weights ("RTNW") containers.
//!
//! Tensor record layout, all little-endian:
//!
//! ```text
//! magic "RTNS" | version u32 = 1 | dtype u32 = 1 (float32)
//! rank u32 | dims: rank x u32 | payload: product(dims) x f32, row-major
//! ```
//!
//! A weights file wraps named tensor records:
//!
//! ```text
//! magic "RTNW" | version u32 = 1 | count u32
//! count x { name_len u32 | name (UTF-8) | full tensor record }
//! ```
//!
//! Entry names are unique; `cfg.C` and `cfg.N` are reserved for the network
//! width and depth, stored as shape-`[1]` tensors.

use std::path::Path;

use super::{FormatError, Reader};
use crate::{Grid, Real, Tensor};

pub const TENSOR_MAGIC: [u8; 4] = *b"RTNS";
pub const WEIGHTS_MAGIC: [u8; 4] = *b"RTNW";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 1;

const MAX_RANK: u32 = 8;
const MAX_ELEMENTS: u64 = 1 << 31;
const MAX_NAME_LEN: u32 = 4096;

/// An n-dimensional little-endian `f32` tensor as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorData {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl TensorData {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, FormatError> {
        if dims.is_empty() || dims.len() > MAX_RANK as usize {
            return Err(FormatError::BadRank(dims.len() as u32));
        }
        let mut product: u64 = 1;
        for &d in &dims {
            if d == 0 {
                return Err(FormatError::BadDims {
                    dims,
                    reason: "zero-sized dimension",
                });
            }
            product = product.saturating_mul(d as u64);
        }
        if product > MAX_ELEMENTS {
            return Err(FormatError::BadDims {
                dims,
                reason: "element count exceeds supported size",
            });
        }
        if data.len() as u64 != product {
            return Err(FormatError::BadDims {
                dims,
                reason: "payload length does not match dims",
            });
        }
        Ok(Self { dims, data })
    }

    pub fn scalar(value: f32) -> Self {
        Self {
            dims: vec![1],
            data: vec![value],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn from_grid<S: Real>(grid: &Grid<S>) -> Self {
        Self {
            dims: vec![grid.rows(), grid.cols()],
            data: grid.data().iter().map(|v| v.widen() as f32).collect(),
        }
    }

    pub fn from_tensor<S: Real>(tensor: &Tensor<S>) -> Self {
        Self {
            dims: vec![tensor.channels(), tensor.rows(), tensor.cols()],
            data: tensor.data().iter().map(|v| v.widen() as f32).collect(),
        }
    }

    /// Rank-2 tensors convert to grids.
    pub fn to_grid<S: Real>(&self) -> Result<Grid<S>, FormatError> {
        match self.dims[..] {
            [rows, cols] => Ok(Grid::from_vec(
                rows,
                cols,
                self.data.iter().map(|&v| S::of(v as f64)).collect(),
            )
            .expect("dims validated at construction")),
            _ => Err(FormatError::WrongShape {
                expected: "rank-2 [rows, cols]",
                found: self.dims.clone(),
            }),
        }
    }

    /// Rank-3 tensors convert to channel-major stacks.
    pub fn to_tensor<S: Real>(&self) -> Result<Tensor<S>, FormatError> {
        match self.dims[..] {
            [channels, rows, cols] => Ok(Tensor::from_vec(
                channels,
                rows,
                cols,
                self.data.iter().map(|&v| S::of(v as f64)).collect(),
            )
            .expect("dims validated at construction")),
            _ => Err(FormatError::WrongShape {
                expected: "rank-3 [channels, rows, cols]",
                found: self.dims.clone(),
            }),
        }
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&DTYPE_F32.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.dims.len() + 4 * self.data.len());
        self.encode_into(&mut out);
        out
    }

    /// Parses one tensor record from the cursor.
    pub(crate) fn decode_from(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        r.magic(TENSOR_MAGIC)?;
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let dtype = r.u32("dtype")?;
        if dtype != DTYPE_F32 {
            return Err(FormatError::UnsupportedDtype(dtype));
        }
        let rank = r.u32("rank")?;
        if rank == 0 || rank > MAX_RANK {
            return Err(FormatError::BadRank(rank));
        }
        let mut dims = Vec::with_capacity(rank as usize);
        let mut product: u64 = 1;
        for _ in 0..rank {
            let d = r.u32("dims")?;
            if d == 0 {
                return Err(FormatError::BadDims {
                    dims: vec![0],
                    reason: "zero-sized dimension",
                });
            }
            product = product.saturating_mul(d as u64);
            dims.push(d as usize);
        }
        if product > MAX_ELEMENTS {
            return Err(FormatError::BadDims {
                dims,
                reason: "element count exceeds supported size",
            });
        }
        let payload = r.take(product as usize * 4, "payload")?;
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        let t = Self::decode_from(&mut r)?;
        if r.remaining() > 0 {
            return Err(FormatError::TrailingBytes {
                extra: r.remaining(),
            });
        }
        Ok(t)
    }
}

pub fn write_tensor(path: &Path, tensor: &TensorData) -> Result<(), FormatError> {
    std::fs::write(path, tensor.encode()).map_err(|e| FormatError::io(path, e))
}

pub fn read_tensor(path: &Path) -> Result<TensorData, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    TensorData::decode(&bytes)
}

/// Ordered, uniquely named tensor entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightsFile {
    entries: Vec<(String, TensorData)>,
}

impl WeightsFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: TensorData) -> Result<(), FormatError> {
        let name = name.into();
        if name.is_empty() || name.len() > MAX_NAME_LEN as usize {
            return Err(FormatError::BadName(name));
        }
        if self.get(&name).is_some() {
            return Err(FormatError::DuplicateEntry(name));
        }
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TensorData> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn entries(&self) -> &[(String, TensorData)] {
        &self.entries
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&WEIGHTS_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, tensor) in &self.entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            tensor.encode_into(&mut out);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(WEIGHTS_MAGIC)?;
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let count = r.u32("entry count")?;
        let mut file = Self::new();
        for _ in 0..count {
            let name_len = r.u32("name length")?;
            if name_len == 0 || name_len > MAX_NAME_LEN {
                return Err(FormatError::BadName(format!("{name_len} byte name")));
            }
            let name_bytes = r.take(name_len as usize, "entry name")?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| FormatError::BadName("non-UTF-8 name".into()))?
                .to_string();
            let tensor = TensorData::decode_from(&mut r)?;
            file.push(name, tensor)?;
        }
        if r.remaining() > 0 {
            return Err(FormatError::TrailingBytes {
                extra: r.remaining(),
            });
        }
        Ok(file)
    }
}

pub fn write_weights(path: &Path, weights: &WeightsFile) -> Result<(), FormatError> {
    std::fs::write(path, weights.encode()).map_err(|e| FormatError::io(path, e))
}

pub fn read_weights(path: &Path) -> Result<WeightsFile, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    WeightsFile::decode(&bytes)
}
