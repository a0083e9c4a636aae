//! Dense row-major 2-D and 3-D buffers used throughout the crate.

use thiserror::Error;

use crate::Real;

/// Shape violation raised by the fallible buffer constructors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("buffer of {len} elements does not match {rows}x{cols} grid")]
    GridLen { rows: usize, cols: usize, len: usize },
    #[error("buffer of {len} elements does not match {channels}x{rows}x{cols} tensor")]
    TensorLen {
        channels: usize,
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("zero-sized dimension in {0}")]
    EmptyDim(&'static str),
}

/// Dense row-major grid indexed as `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    /// Grid of `rows x cols` copies of `value`. Dimensions must be non-zero.
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be non-zero");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Wraps an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, ShapeError> {
        if rows == 0 || cols == 0 {
            return Err(ShapeError::EmptyDim("grid"));
        }
        if data.len() != rows * cols {
            return Err(ShapeError::GridLen {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }
}

impl<T> Grid<T> {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[self.offset(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let at = self.offset(row, col);
        self.data[at] = value;
    }

    #[inline]
    fn offset(&self, row: usize, col: usize) -> usize {
        assert!(row < self.rows && col < self.cols, "grid index out of range");
        row * self.cols + col
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Iterates `(row, col, &value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / cols, i % cols, v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Grid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &T {
        self.get(row, col)
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut T {
        let at = self.offset(row, col);
        &mut self.data[at]
    }
}

/// Dense channel-major (channel, row, col) stack of feature planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    channels: usize,
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> Tensor<S> {
    pub fn zeros(channels: usize, rows: usize, cols: usize) -> Self {
        assert!(
            channels > 0 && rows > 0 && cols > 0,
            "tensor dimensions must be non-zero"
        );
        Self {
            channels,
            rows,
            cols,
            data: vec![S::zero(); channels * rows * cols],
        }
    }

    pub fn from_vec(
        channels: usize,
        rows: usize,
        cols: usize,
        data: Vec<S>,
    ) -> Result<Self, ShapeError> {
        if channels == 0 || rows == 0 || cols == 0 {
            return Err(ShapeError::EmptyDim("tensor"));
        }
        if data.len() != channels * rows * cols {
            return Err(ShapeError::TensorLen {
                channels,
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self {
            channels,
            rows,
            cols,
            data,
        })
    }

    /// Stacks equally-shaped grids into channels.
    pub fn from_grids(grids: &[Grid<S>]) -> Result<Self, ShapeError> {
        if grids.is_empty() {
            return Err(ShapeError::EmptyDim("tensor channels"));
        }
        let (rows, cols) = (grids[0].rows(), grids[0].cols());
        let mut data = Vec::with_capacity(grids.len() * rows * cols);
        for g in grids {
            if g.rows() != rows || g.cols() != cols {
                return Err(ShapeError::TensorLen {
                    channels: grids.len(),
                    rows,
                    cols,
                    len: g.data().len(),
                });
            }
            data.extend_from_slice(g.data());
        }
        Ok(Self {
            channels: grids.len(),
            rows,
            cols,
            data,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn plane(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn at(&self, channel: usize, row: usize, col: usize) -> S {
        self.data[self.offset(channel, row, col)]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: S) {
        let at = self.offset(channel, row, col);
        self.data[at] = value;
    }

    #[inline]
    fn offset(&self, channel: usize, row: usize, col: usize) -> usize {
        assert!(
            channel < self.channels && row < self.rows && col < self.cols,
            "tensor index out of range"
        );
        (channel * self.rows + row) * self.cols + col
    }

    /// Row-major slice of one channel plane.
    #[inline]
    pub fn channel_data(&self, channel: usize) -> &[S] {
        assert!(channel < self.channels, "tensor channel out of range");
        let plane = self.plane();
        &self.data[channel * plane..(channel + 1) * plane]
    }

    /// Mutable row-major slice of one channel plane.
    #[inline]
    pub fn channel_data_mut(&mut self, channel: usize) -> &mut [S] {
        assert!(channel < self.channels, "tensor channel out of range");
        let plane = self.plane();
        &mut self.data[channel * plane..(channel + 1) * plane]
    }

    /// Copies one channel out as a grid.
    pub fn channel_grid(&self, channel: usize) -> Grid<S> {
        Grid::from_vec(self.rows, self.cols, self.channel_data(channel).to_vec())
            .expect("channel plane always matches grid shape")
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }
}
