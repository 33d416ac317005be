//! A small dense-tensor compute core with reverse-mode differentiation.
//!
//! Forward ops are recorded on a [`Graph`]; [`Graph::backward`] walks the
//! recording in reverse and returns [`Gradients`] for every trainable leaf.
//! All arithmetic is `f64`.

pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod sparse;
pub mod tensor;

pub use error::{AutodiffError, Result};
pub use gradcheck::{analytic_gradients, compare_with_finite_differences, gradient_check, GradCheckReport};
pub use graph::{Gradients, Graph, Var};
pub use sparse::SparseMatrix;
pub use tensor::Tensor;

/// Clamp used for every logarithm in information-theoretic quantities.
pub const LOG_EPS: f64 = 1e-12;
