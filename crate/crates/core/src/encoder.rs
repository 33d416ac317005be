//! L-layer bipartite message-passing encoder.
//!
//! Layer `l` computes
//!
//! ```text
//! V̂ˡ = tanh([leaky(A_VU · Uˡ⁻¹ · W1ˡ) ‖ Vˡ⁻¹] · W2ˡ)
//! Uˡ = tanh([leaky(A_UV · V̂ˡ  · W3ˡ) ‖ Uˡ⁻¹] · W4ˡ)
//! ```
//!
//! and carries `V̂ˡ` forward as the V state, so the returned V embedding is
//! `V̂ᴸ`. Rows of isolated nodes aggregate to zero and only see their own
//! previous state through the concatenation.

use coin_autodiff::{Graph, Tensor, Var};
use rand::Rng;

use crate::error::{CoinError, Result};
use crate::graph::BipartiteGraph;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.1;

/// Uniform(−a, a) with `a = sqrt(6 / (rows + cols))`.
pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Tensor::matrix(rows, cols, data).expect("length matches shape")
}

/// Weights of one encoder layer: `w1, w3` are `d × d`, `w2, w4` are `2d × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayer {
    pub w1: Tensor,
    pub w2: Tensor,
    pub w3: Tensor,
    pub w4: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub layers: Vec<EncoderLayer>,
    pub d: usize,
    pub leaky_slope: f64,
}

impl EncoderParams {
    pub fn init<R: Rng + ?Sized>(d: usize, num_layers: usize, rng: &mut R) -> Result<Self> {
        if d == 0 || num_layers == 0 {
            return Err(CoinError::InvalidArgument(
                "encoder needs d >= 1 and at least one layer".into(),
            ));
        }
        let layers = (0..num_layers)
            .map(|_| EncoderLayer {
                w1: xavier_uniform(d, d, rng),
                w2: xavier_uniform(2 * d, d, rng),
                w3: xavier_uniform(d, d, rng),
                w4: xavier_uniform(2 * d, d, rng),
            })
            .collect();
        Ok(Self {
            layers,
            d,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        })
    }

    pub fn zeros(d: usize, num_layers: usize) -> Self {
        let layer = EncoderLayer {
            w1: Tensor::zeros(&[d, d]),
            w2: Tensor::zeros(&[2 * d, d]),
            w3: Tensor::zeros(&[d, d]),
            w4: Tensor::zeros(&[2 * d, d]),
        };
        Self {
            layers: vec![layer; num_layers],
            d,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if self.layers.is_empty() {
            return Err(CoinError::Dimension("encoder has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let shapes = [(&l.w1, d), (&l.w2, 2 * d), (&l.w3, d), (&l.w4, 2 * d)];
            for (j, (w, rows)) in shapes.into_iter().enumerate() {
                if w.shape() != [rows, d] {
                    return Err(CoinError::Dimension(format!(
                        "layer {i} W{}: expected [{rows}, {d}], got {:?}",
                        j + 1,
                        w.shape()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn register(&self, g: &mut Graph) -> EncoderVars {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                [
                    g.param(l.w1.clone()),
                    g.param(l.w2.clone()),
                    g.param(l.w3.clone()),
                    g.param(l.w4.clone()),
                ]
            })
            .collect();
        EncoderVars {
            layers,
            leaky_slope: self.leaky_slope,
        }
    }
}

/// Encoder weights recorded on a graph, `[W1, W2, W3, W4]` per layer.
#[derive(Clone, Debug)]
pub struct EncoderVars {
    pub layers: Vec<[Var; 4]>,
    pub leaky_slope: f64,
}

/// `|U| × d` and `|V| × d` embedding matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingPair {
    pub emb_u: Tensor,
    pub emb_v: Tensor,
}

impl EmbeddingPair {
    pub fn d(&self) -> usize {
        self.emb_u.cols()
    }
}

pub fn init_embeddings<R: Rng + ?Sized>(num_u: usize, num_v: usize, d: usize, rng: &mut R) -> Result<EmbeddingPair> {
    if num_u == 0 || num_v == 0 || d == 0 {
        return Err(CoinError::InvalidArgument(format!(
            "embedding dimensions must be positive, got ({num_u}, {num_v}, {d})"
        )));
    }
    Ok(EmbeddingPair {
        emb_u: xavier_uniform(num_u, d, rng),
        emb_v: xavier_uniform(num_v, d, rng),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dropout {
    Off,
    Train(f64),
}

impl Dropout {
    fn p(self) -> (bool, f64) {
        match self {
            Dropout::Off => (false, 0.0),
            Dropout::Train(p) => (true, p),
        }
    }
}

/// Records the encoder on `g` and returns the `(U, V)` output vars.
pub fn encode_on<R: Rng + ?Sized>(
    g: &mut Graph,
    graph: &BipartiteGraph,
    vars: &EncoderVars,
    init_u: Var,
    init_v: Var,
    dropout: Dropout,
    rng: &mut R,
) -> Result<(Var, Var)> {
    let (training, p) = dropout.p();
    let (mut u, mut v) = (init_u, init_v);
    for &[w1, w2, w3, w4] in &vars.layers {
        let agg = g.spmm(graph.adj_vu(), u)?;
        let msg = g.matmul(agg, w1)?;
        let msg = g.leaky_relu(msg, vars.leaky_slope);
        let cat = g.concat_columns(msg, v)?;
        let lin = g.matmul(cat, w2)?;
        let v_hat = g.tanh(lin);
        let v_hat = g.dropout(v_hat, p, training, rng)?;

        let agg = g.spmm(graph.adj_uv(), v_hat)?;
        let msg = g.matmul(agg, w3)?;
        let msg = g.leaky_relu(msg, vars.leaky_slope);
        let cat = g.concat_columns(msg, u)?;
        let lin = g.matmul(cat, w4)?;
        let u_next = g.tanh(lin);
        u = g.dropout(u_next, p, training, rng)?;
        v = v_hat;
    }
    Ok((u, v))
}

fn check_init(graph: &BipartiteGraph, params: &EncoderParams, init: &EmbeddingPair) -> Result<()> {
    params.validate()?;
    let d = params.d;
    if init.emb_u.shape() != [graph.num_u(), d] || init.emb_v.shape() != [graph.num_v(), d] {
        return Err(CoinError::Dimension(format!(
            "initial embeddings {:?}/{:?} do not match graph ({}, {}) with d={d}",
            init.emb_u.shape(),
            init.emb_v.shape(),
            graph.num_u(),
            graph.num_v()
        )));
    }
    Ok(())
}

/// Runs the encoder outside of training and returns plain tensors.
pub fn encode<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    params: &EncoderParams,
    init: &EmbeddingPair,
    dropout: Dropout,
    rng: &mut R,
) -> Result<EmbeddingPair> {
    check_init(graph, params, init)?;
    let mut g = Graph::new();
    let vars = params.register(&mut g);
    let u0 = g.constant(init.emb_u.clone());
    let v0 = g.constant(init.emb_v.clone());
    let (u, v) = encode_on(&mut g, graph, &vars, u0, v0, dropout, rng)?;
    Ok(EmbeddingPair {
        emb_u: g.value(u).clone(),
        emb_v: g.value(v).clone(),
    })
}
