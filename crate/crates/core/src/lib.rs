//! Co-cluster infomax embeddings for bipartite graphs.
//!
//! The crate covers graph loading and splitting, the message-passing encoder,
//! the co-cluster and instance objectives, training, and evaluation.

pub mod check;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod objectives;
pub mod trainer;

pub use coin_autodiff::Tensor;
pub use error::{CoinError, Result};
