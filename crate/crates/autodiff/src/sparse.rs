//! Compressed sparse row matrices.

use rayon::prelude::*;

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

const PAR_NNZ_THRESHOLD: usize = 1 << 14;

/// CSR matrix. Column indices are strictly increasing within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed into a single entry.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(AutodiffError::InvalidArgument {
                    op: "sparse_from_triplets",
                    msg: format!("entry ({r}, {c}) outside a {rows}x{cols} matrix"),
                });
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(dense: &Tensor) -> Result<Self> {
        let (r, c) = dense.require_matrix("sparse_from_dense")?;
        let mut triplets = Vec::new();
        for i in 0..r {
            for j in 0..c {
                let v = dense.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(r, c, &triplets)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(&[self.rows, self.cols]);
        let cols = self.cols;
        let data = out.data_mut();
        for (r, c, v) in self.iter() {
            data[r * cols + c] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &triplets).expect("transposed indices are in range")
    }

    /// Scales every nonzero row to sum to one. All-zero rows stay zero.
    pub fn row_normalized(&self) -> Result<Self> {
        if let Some(v) = self.values.iter().find(|&&v| v < 0.0 || v.is_nan()) {
            return Err(AutodiffError::InvalidArgument {
                op: "row_normalize",
                msg: format!("negative or NaN entry {v}"),
            });
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            let total: f64 = out.values[span.clone()].iter().sum();
            if total > 0.0 {
                for v in &mut out.values[span] {
                    *v /= total;
                }
            }
        }
        Ok(out)
    }

    /// Sparse × dense product.
    pub fn mul_dense(&self, dense: &Tensor) -> Result<Tensor> {
        let (k, n) = dense.require_matrix("spmm")?;
        if k != self.cols {
            return Err(AutodiffError::ShapeMismatch {
                op: "spmm",
                left: self.shape().to_vec(),
                right: dense.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; self.rows * n];
        let b = dense.data();
        let kernel = |(r, row): (usize, &mut [f64])| {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in row.iter_mut().zip(&b[c * n..(c + 1) * n]) {
                    *o += v * x;
                }
            }
        };
        if n > 0 {
            if self.nnz() * n >= PAR_NNZ_THRESHOLD {
                out.par_chunks_mut(n).enumerate().for_each(kernel);
            } else {
                out.chunks_mut(n).enumerate().for_each(kernel);
            }
        }
        Tensor::matrix(self.rows, n, out)
    }
}
