use coin_autodiff::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::encoder::{self, init_embeddings, Dropout, EmbeddingPair, EncoderLayer, EncoderParams, EncoderVars};
use crate::error::{CoinError, Result};
use crate::graph::BipartiteGraph;
use crate::objectives::{self, ClusterHead, ClusterHeads, HeadVars, ScorerParams, ScorerVars};

/// Shape summary stored in checkpoint headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub num_u: usize,
    pub num_v: usize,
    pub d: usize,
    pub layers: usize,
    pub n_k: usize,
    pub n_l: usize,
    #[serde(default)]
    pub head_hidden_layers: usize,
}

impl ModelDims {
    /// Tensor names and shapes in canonical order.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let d = self.d;
        let mut out = Vec::new();
        for l in 0..self.layers {
            for (i, rows) in [(1, d), (2, 2 * d), (3, d), (4, 2 * d)] {
                out.push((format!("encoder.{l}.w{i}"), vec![rows, d]));
            }
        }
        out.push(("init.u".into(), vec![self.num_u, d]));
        out.push(("init.v".into(), vec![self.num_v, d]));
        for (side, n) in [("u", self.n_k), ("v", self.n_l)] {
            for h in 0..self.head_hidden_layers {
                out.push((format!("head_{side}.{h}.weight"), vec![d, d]));
                out.push((format!("head_{side}.{h}.bias"), vec![1, d]));
            }
            let h = self.head_hidden_layers;
            out.push((format!("head_{side}.{h}.weight"), vec![d, n]));
            out.push((format!("head_{side}.{h}.bias"), vec![1, n]));
        }
        out.push(("scorer.w1".into(), vec![2 * d, d]));
        out.push(("scorer.w2".into(), vec![d, 1]));
        out
    }
}

/// All trainable state: encoder, initial embeddings, cluster heads, scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub encoder: EncoderParams,
    pub init: EmbeddingPair,
    pub heads: ClusterHeads,
    pub scorer: ScorerParams,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(num_u: usize, num_v: usize, config: &TrainConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let init = init_embeddings(num_u, num_v, config.d, rng)?;
        let mut encoder = EncoderParams::init(config.d, config.layers, rng)?;
        encoder.leaky_slope = config.leaky_slope;
        let heads = ClusterHeads::init(config.d, config.n_k, config.n_l, config.head_hidden_layers, rng)?;
        let scorer = ScorerParams::init(config.d, rng);
        Ok(Self {
            encoder,
            init,
            heads,
            scorer,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            num_u: self.init.emb_u.rows(),
            num_v: self.init.emb_v.rows(),
            d: self.encoder.d,
            layers: self.encoder.layers.len(),
            n_k: self.heads.n_k(),
            n_l: self.heads.n_l(),
            head_hidden_layers: self.heads.head_u.layers.len() - 1,
        }
    }

    /// Parameters in canonical order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for l in &self.encoder.layers {
            out.extend([&l.w1, &l.w2, &l.w3, &l.w4]);
        }
        out.extend([&self.init.emb_u, &self.init.emb_v]);
        for head in [&self.heads.head_u, &self.heads.head_v] {
            for (w, b) in &head.layers {
                out.extend([w, b]);
            }
        }
        out.extend([&self.scorer.w1, &self.scorer.w2]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.encoder.layers {
            out.extend([&mut l.w1, &mut l.w2, &mut l.w3, &mut l.w4]);
        }
        out.extend([&mut self.init.emb_u, &mut self.init.emb_v]);
        for head in [&mut self.heads.head_u, &mut self.heads.head_v] {
            for (w, b) in &mut head.layers {
                out.extend([w, b]);
            }
        }
        out.extend([&mut self.scorer.w1, &mut self.scorer.w2]);
        out
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        self.dims()
            .layout()
            .into_iter()
            .map(|(name, _)| name)
            .zip(self.tensors())
            .collect()
    }

    /// Rebuilds a model from tensors listed in canonical order.
    pub fn from_tensors(dims: ModelDims, leaky_slope: f64, tensors: Vec<Tensor>) -> Result<Self> {
        let layout = dims.layout();
        if tensors.len() != layout.len() {
            return Err(CoinError::Dimension(format!(
                "expected {} tensors, got {}",
                layout.len(),
                tensors.len()
            )));
        }
        for ((name, shape), t) in layout.iter().zip(&tensors) {
            if t.shape() != shape.as_slice() {
                return Err(CoinError::Dimension(format!(
                    "{name}: expected shape {shape:?}, got {:?}",
                    t.shape()
                )));
            }
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().expect("length checked");
        let layers = (0..dims.layers)
            .map(|_| EncoderLayer {
                w1: next(),
                w2: next(),
                w3: next(),
                w4: next(),
            })
            .collect();
        let encoder = EncoderParams {
            layers,
            d: dims.d,
            leaky_slope,
        };
        let init = EmbeddingPair {
            emb_u: next(),
            emb_v: next(),
        };
        let mut head = || ClusterHead {
            layers: (0..=dims.head_hidden_layers).map(|_| (next(), next())).collect(),
        };
        let heads = ClusterHeads {
            head_u: head(),
            head_v: head(),
        };
        let scorer = ScorerParams { w1: next(), w2: next() };
        Ok(Self {
            encoder,
            init,
            heads,
            scorer,
        })
    }

    /// Records every parameter on `g`, in canonical order.
    pub fn register(&self, g: &mut Graph) -> ModelVars {
        let vars: Vec<Var> = self.tensors().into_iter().map(|t| g.param(t.clone())).collect();
        ModelVars::from_vars(self.dims(), self.encoder.leaky_slope, &vars)
    }

    /// Inference-mode embeddings of the graph's nodes.
    pub fn embed(&self, graph: &BipartiteGraph) -> Result<EmbeddingPair> {
        // Dropout is off, so the generator is never drawn from.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        encoder::encode(graph, &self.encoder, &self.init, Dropout::Off, &mut rng)
    }

    /// Inference-mode cluster probabilities `(P_U, P_V)`.
    pub fn cluster_probs(&self, graph: &BipartiteGraph) -> Result<(Tensor, Tensor)> {
        objectives::cluster_probs(&self.embed(graph)?, &self.heads)
    }
}

/// Graph handles for every model parameter.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub encoder: EncoderVars,
    pub init_u: Var,
    pub init_v: Var,
    pub head_u: HeadVars,
    pub head_v: HeadVars,
    pub scorer: ScorerVars,
    all: Vec<Var>,
}

impl ModelVars {
    /// Interprets `vars` as parameters laid out in canonical order.
    pub fn from_vars(dims: ModelDims, leaky_slope: f64, vars: &[Var]) -> Self {
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("one var per canonical tensor");
        let layers = (0..dims.layers).map(|_| [next(), next(), next(), next()]).collect();
        let init_u = next();
        let init_v = next();
        let mut head = || HeadVars {
            layers: (0..=dims.head_hidden_layers).map(|_| (next(), next())).collect(),
        };
        let head_u = head();
        let head_v = head();
        let scorer = ScorerVars { w1: next(), w2: next() };
        Self {
            encoder: EncoderVars { layers, leaky_slope },
            init_u,
            init_v,
            head_u,
            head_v,
            scorer,
            all: vars.to_vec(),
        }
    }

    pub fn all(&self) -> &[Var] {
        &self.all
    }
}
