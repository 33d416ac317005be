//! Dense row-major `f64` tensors and the matrix kernels shared by the tape.
//!
//! Rank-0 tensors are scalars, rank-2 tensors are matrices. A rank-1 tensor
//! of length `n` is treated as a `1 × n` row wherever a matrix is expected.

use rayon::prelude::*;

use crate::error::{AutodiffError, Result};

/// Below this many multiply-adds a matmul stays on the calling thread.
const PAR_FLOP_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(AutodiffError::DataLength { shape, len: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(AutodiffError::ShapeMismatch {
                op: "from_rows",
                left: vec![cols],
                right: vec![bad.len()],
            });
        }
        let data = rows.iter().flatten().copied().collect();
        Self::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.iter().all(|&d| d == 1)
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    /// `(rows, cols)` under the matrix view described in the module docs.
    pub fn dims2(&self) -> Option<(usize, usize)> {
        match self.shape.as_slice() {
            [] => Some((1, 1)),
            [n] => Some((1, *n)),
            [r, c] => Some((*r, *c)),
            _ => None,
        }
    }

    pub(crate) fn require_matrix(&self, op: &'static str) -> Result<(usize, usize)> {
        self.dims2().ok_or_else(|| AutodiffError::NotMatrix {
            op,
            shape: self.shape.clone(),
        })
    }

    pub fn rows(&self) -> usize {
        self.dims2().map_or(0, |d| d.0)
    }

    pub fn cols(&self) -> usize {
        self.dims2().map_or(0, |d| d.1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.require_matrix("transpose")?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Self::matrix(c, r, out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = self.require_matrix("matmul")?;
        let (k2, n) = other.require_matrix("matmul")?;
        if k != k2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = vec![0.0; m * n];
        let a = &self.data;
        let b = &other.data;
        let kernel = |(i, row): (usize, &mut [f64])| {
            let a_row = &a[i * k..(i + 1) * k];
            for (p, &aip) in a_row.iter().enumerate() {
                if aip == 0.0 {
                    continue;
                }
                let b_row = &b[p * n..(p + 1) * n];
                for (o, &bv) in row.iter_mut().zip(b_row) {
                    *o += aip * bv;
                }
            }
        };
        if n > 0 {
            if m * k * n >= PAR_FLOP_THRESHOLD {
                out.par_chunks_mut(n).enumerate().for_each(kernel);
            } else {
                out.chunks_mut(n).enumerate().for_each(kernel);
            }
        }
        Self::matrix(m, n, out)
    }

    /// `self · otherᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self> {
        let (m, k) = self.require_matrix("matmul_nt")?;
        let (n, k2) = other.require_matrix("matmul_nt")?;
        if k != k2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul_nt",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = vec![0.0; m * n];
        let a = &self.data;
        let b = &other.data;
        let kernel = |(i, row): (usize, &mut [f64])| {
            let a_row = &a[i * k..(i + 1) * k];
            for (j, o) in row.iter_mut().enumerate() {
                let b_row = &b[j * k..(j + 1) * k];
                *o = a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
            }
        };
        if n > 0 {
            if m * k * n >= PAR_FLOP_THRESHOLD {
                out.par_chunks_mut(n).enumerate().for_each(kernel);
            } else {
                out.chunks_mut(n).enumerate().for_each(kernel);
            }
        }
        Self::matrix(m, n, out)
    }

    pub fn concat_columns(&self, other: &Self) -> Result<Self> {
        let (r, c1) = self.require_matrix("concat_columns")?;
        let (r2, c2) = other.require_matrix("concat_columns")?;
        if r != r2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat_columns",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = Vec::with_capacity(r * (c1 + c2));
        for i in 0..r {
            out.extend_from_slice(&self.data[i * c1..(i + 1) * c1]);
            out.extend_from_slice(&other.data[i * c2..(i + 1) * c2]);
        }
        Self::matrix(r, c1 + c2, out)
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        let (r, c) = self.require_matrix("slice_rows")?;
        if start > end || end > r {
            return Err(AutodiffError::InvalidArgument {
                op: "slice_rows",
                msg: format!("range {start}..{end} out of bounds for {r} rows"),
            });
        }
        Self::matrix(end - start, c, self.data[start * c..end * c].to_vec())
    }

    /// Row sums as an `r × 1` column.
    pub fn row_sums(&self) -> Result<Self> {
        let (r, c) = self.require_matrix("row_sums")?;
        let out = (0..r).map(|i| self.data[i * c..(i + 1) * c].iter().sum()).collect();
        Self::matrix(r, 1, out)
    }

    /// Column sums as a `1 × c` row.
    pub fn col_sums(&self) -> Result<Self> {
        let (r, c) = self.require_matrix("col_sums")?;
        let mut out = vec![0.0; c];
        for i in 0..r {
            for (o, v) in out.iter_mut().zip(&self.data[i * c..(i + 1) * c]) {
                *o += v;
            }
        }
        Self::matrix(1, c, out)
    }
}
