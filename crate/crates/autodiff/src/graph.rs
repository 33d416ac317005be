//! Operation tape and reverse-mode gradients.
//!
//! Every op appends a node whose parents already exist, so the node vector
//! is a topological order and backward is a single reverse sweep.

use std::sync::Arc;

use rand::Rng;

use crate::error::{AutodiffError, Result};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<SparseMatrix>, Var),
    Transpose(Var),
    ConcatCols(Var, Var),
    SliceRows(Var, usize),
    GatherRows(Var, Arc<[usize]>),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Scale(Var, f64),
    LeakyRelu(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    LogSigmoid(Var),
    Exp(Var),
    Powf(Var, f64),
    LogClamped(Var, f64),
    SoftmaxRows(Var),
    Sum(Var),
    Mean(Var),
    RowSums(Var),
    ColSums(Var),
    Dropout(Var, Vec<f64>),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    trainable: bool,
    needs_grad: bool,
}

/// A recorded computation. Build one per forward pass.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every node that needed one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `var`; zeros if `var` does not influence the root.
    pub fn wrt(&self, var: Var) -> Tensor {
        match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.0]),
        }
    }

    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }

    pub fn take(&mut self, var: Var) -> Tensor {
        self.grads[var.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[var.0]))
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    x.min(0.0) - (-x.abs()).exp().ln_1p()
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            trainable: false,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            trainable: true,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            trainable: false,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Copies the current value of `v` into a constant, cutting gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn parameters(&self) -> Vec<Var> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].trainable)
            .map(Var)
            .collect()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, b: Var) -> Result<Var> {
        let out = s.mul_dense(self.value(b))?;
        Ok(self.push(out, Op::SpMM(Arc::clone(s), b), &[b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        Ok(self.push(out, Op::Transpose(a), &[a]))
    }

    pub fn concat_columns(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).concat_columns(self.value(b))?;
        Ok(self.push(out, Op::ConcatCols(a, b), &[a, b]))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let out = self.value(a).slice_rows(start, end)?;
        Ok(self.push(out, Op::SliceRows(a, start), &[a]))
    }

    /// Row `i` of the output is row `indices[i]` of `a`.
    pub fn gather_rows(&mut self, a: Var, indices: impl Into<Arc<[usize]>>) -> Result<Var> {
        let indices = indices.into();
        let src = self.value(a);
        let (r, c) = src.require_matrix("gather_rows")?;
        let mut out = Vec::with_capacity(indices.len() * c);
        for &i in indices.iter() {
            if i >= r {
                return Err(AutodiffError::InvalidArgument {
                    op: "gather_rows",
                    msg: format!("row {i} out of bounds for {r} rows"),
                });
            }
            out.extend_from_slice(src.row(i));
        }
        let out = Tensor::matrix(indices.len(), c, out)?;
        Ok(self.push(out, Op::GatherRows(a, indices), &[a]))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(mismatch(op, x, y));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn multiply(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("multiply", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    /// Adds a `1 × c` bias row to every row of an `r × c` matrix.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        let (_, c) = x.require_matrix("add_row_bias")?;
        if b.dims2() != Some((1, c)) {
            return Err(mismatch("add_row_bias", x, b));
        }
        let bias_row = b.data();
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(c.max(1)) {
            for (o, bv) in row.iter_mut().zip(bias_row) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddRowBias(a, bias), &[a, bias]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a).map(|x| x * factor);
        self.push(out, Op::Scale(a, factor), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(out, Op::LeakyRelu(a, slope), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(stable_sigmoid);
        self.push(out, Op::Sigmoid(a), &[a])
    }

    /// `ln σ(x)`, evaluated without overflow.
    pub fn log_sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(log_sigmoid);
        self.push(out, Op::LogSigmoid(a), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a), &[a])
    }

    /// Elementwise `x^exponent`; inputs must be positive.
    pub fn powf(&mut self, a: Var, exponent: f64) -> Result<Var> {
        let x = self.value(a);
        if x.data().iter().any(|&v| !(v > 0.0)) {
            return Err(AutodiffError::InvalidArgument {
                op: "powf",
                msg: "inputs must be strictly positive".into(),
            });
        }
        let out = x.map(|v| v.powf(exponent));
        Ok(self.push(out, Op::Powf(a, exponent), &[a]))
    }

    /// `ln(max(x, eps))`.
    pub fn log_clamped(&mut self, a: Var, eps: f64) -> Result<Var> {
        if !(eps > 0.0) {
            return Err(AutodiffError::InvalidArgument {
                op: "log_clamped",
                msg: format!("eps must be positive, got {eps}"),
            });
        }
        let out = self.value(a).map(|x| x.max(eps).ln());
        Ok(self.push(out, Op::LogClamped(a, eps), &[a]))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (_, c) = x.require_matrix("softmax_rows")?;
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(c.max(1)) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        Ok(self.push(out, Op::SoftmaxRows(a), &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = Tensor::scalar(x.sum() / x.len() as f64);
        self.push(out, Op::Mean(a), &[a])
    }

    pub fn row_sums(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).row_sums()?;
        Ok(self.push(out, Op::RowSums(a), &[a]))
    }

    pub fn col_sums(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).col_sums()?;
        Ok(self.push(out, Op::ColSums(a), &[a]))
    }

    /// Inverted dropout. In training mode each element is zeroed with
    /// probability `p` and survivors are scaled by `1/(1-p)`; otherwise
    /// `a` is returned unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(AutodiffError::InvalidArgument {
                op: "dropout",
                msg: format!("probability must lie in [0, 1), got {p}"),
            });
        }
        if !training || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(a).len())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let x = self.value(a);
        let mut out = x.clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        Ok(self.push(out, Op::Dropout(a, mask), &[a]))
    }

    /// Reverse sweep from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(AutodiffError::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::ones(root_value.shape()));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let mut send = |v: Var, contribution: Tensor| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&contribution),
                slot => *slot = Some(contribution),
            }
        };
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[a.0].needs_grad {
                    send(*a, g.matmul_nt(self.value(*b))?);
                }
                if self.nodes[b.0].needs_grad {
                    send(*b, self.value(*a).transpose()?.matmul(g)?);
                }
            }
            Op::SpMM(s, b) => {
                send(*b, s.transpose().mul_dense(g)?);
            }
            Op::Transpose(a) => send(*a, g.transpose()?),
            Op::ConcatCols(a, b) => {
                let c1 = self.value(*a).cols();
                let (r, c) = g.require_matrix("concat_columns")?;
                let c2 = c - c1;
                let mut left = Vec::with_capacity(r * c1);
                let mut right = Vec::with_capacity(r * c2);
                for row in g.data().chunks(c.max(1)) {
                    left.extend_from_slice(&row[..c1]);
                    right.extend_from_slice(&row[c1..]);
                }
                send(*a, Tensor::matrix(r, c1, left)?);
                send(*b, Tensor::matrix(r, c2, right)?);
            }
            Op::SliceRows(a, start) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut full = Tensor::zeros(src.shape());
                full.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                send(*a, full);
            }
            Op::GatherRows(a, indices) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut full = Tensor::zeros(src.shape());
                let data = full.data_mut();
                for (i, &r) in indices.iter().enumerate() {
                    for (o, v) in data[r * c..(r + 1) * c].iter_mut().zip(g.row(i)) {
                        *o += v;
                    }
                }
                send(*a, full);
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                send(*a, g.zip_map(self.value(*b), |x, y| x * y));
                send(*b, g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::AddRowBias(a, bias) => {
                send(*a, g.clone());
                let mut db = g.col_sums()?;
                db = Tensor::new(self.value(*bias).shape().to_vec(), db.into_data())?;
                send(*bias, db);
            }
            Op::Scale(a, f) => send(*a, g.map(|x| x * f)),
            Op::LeakyRelu(a, slope) => {
                send(
                    *a,
                    g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { gv * slope }),
                );
            }
            Op::Tanh(a) => send(*a, g.zip_map(y, |gv, t| gv * (1.0 - t * t))),
            Op::Sigmoid(a) => send(*a, g.zip_map(y, |gv, s| gv * s * (1.0 - s))),
            Op::LogSigmoid(a) => {
                send(*a, g.zip_map(self.value(*a), |gv, x| gv * stable_sigmoid(-x)));
            }
            Op::Exp(a) => send(*a, g.zip_map(y, |gv, e| gv * e)),
            Op::Powf(a, p) => {
                send(*a, g.zip_map(self.value(*a), |gv, x| gv * p * x.powf(p - 1.0)));
            }
            Op::LogClamped(a, eps) => {
                send(
                    *a,
                    g.zip_map(self.value(*a), |gv, x| if x >= *eps { gv / x } else { 0.0 }),
                );
            }
            Op::SoftmaxRows(a) => {
                let c = y.cols().max(1);
                let mut dx = g.clone();
                for (drow, yrow) in dx.data_mut().chunks_mut(c).zip(y.data().chunks(c)) {
                    let dot: f64 = drow.iter().zip(yrow).map(|(d, s)| d * s).sum();
                    for (d, s) in drow.iter_mut().zip(yrow) {
                        *d = s * (*d - dot);
                    }
                }
                send(*a, dx);
            }
            Op::Sum(a) => send(*a, Tensor::full(self.value(*a).shape(), g.item())),
            Op::Mean(a) => {
                let src = self.value(*a);
                send(*a, Tensor::full(src.shape(), g.item() / src.len() as f64));
            }
            Op::RowSums(a) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut full = Tensor::zeros(src.shape());
                for (row, gv) in full.data_mut().chunks_mut(c.max(1)).zip(g.data()) {
                    row.fill(*gv);
                }
                send(*a, full);
            }
            Op::ColSums(a) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut full = Tensor::zeros(src.shape());
                for row in full.data_mut().chunks_mut(c.max(1)) {
                    row.copy_from_slice(g.data());
                }
                send(*a, full);
            }
            Op::Dropout(a, mask) => {
                let mut dx = g.clone();
                for (d, m) in dx.data_mut().iter_mut().zip(mask) {
                    *d *= m;
                }
                send(*a, dx);
            }
        }
        Ok(())
    }
}
