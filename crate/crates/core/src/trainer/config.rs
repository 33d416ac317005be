use serde::{Deserialize, Serialize};

use crate::encoder::DEFAULT_LEAKY_SLOPE;
use crate::error::{CoinError, Result};
use crate::objectives::{InstanceLossForm, PriorKind, Reduction, Similarity};

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub d: usize,
    pub layers: usize,
    pub n_k: usize,
    pub n_l: usize,
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    pub dropout_p: f64,
    pub negatives_per_positive: usize,
    /// Edges per optimizer step; `None` trains on all edges at once.
    pub edge_batch: Option<usize>,
    pub instance_loss_form: InstanceLossForm,
    /// Sum (the literal objective) or mean of the per-pair terms.
    pub instance_reduction: Reduction,
    pub seed: u64,
    pub similarity: Similarity,
    pub prior: PriorKind,
    /// Extra `d × d` tanh layers in each cluster head.
    pub head_hidden_layers: usize,
    pub leaky_slope: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Evaluate the MI term on detached embeddings: it still trains the
    /// cluster heads but sends no gradient into the encoder.
    pub detach_mi: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 128,
            layers: 2,
            n_k: 5,
            n_l: 5,
            lambda: 1.0,
            lr: 0.0005,
            epochs: 100,
            dropout_p: 0.5,
            negatives_per_positive: 1,
            edge_batch: None,
            instance_loss_form: InstanceLossForm::Literal,
            instance_reduction: Reduction::Sum,
            seed: 0,
            similarity: Similarity::Mlp,
            prior: PriorKind::Edges,
            head_hidden_layers: 0,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            detach_mi: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("layers", self.layers),
            ("n_k", self.n_k),
            ("n_l", self.n_l),
            ("negatives_per_positive", self.negatives_per_positive),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(CoinError::Config(format!("{name} must be positive")));
        }
        if self.edge_batch == Some(0) {
            return Err(CoinError::Config("edge_batch must be positive when set".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(CoinError::Config(format!(
                "dropout_p must lie in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CoinError::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(CoinError::Config(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(CoinError::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(CoinError::Config("adam_eps must be positive".into()));
        }
        Ok(())
    }
}
