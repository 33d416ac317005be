use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::EmbeddingPair;
use crate::error::{CoinError, Result};
use crate::graph::BipartiteGraph;

/// How a `(u, v)` pair is turned into classifier features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    #[default]
    Hadamard,
    Concat,
}

/// Elementwise product of the two embeddings.
pub fn edge_features(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    edge_features_with(u, v, FeatureKind::Hadamard)
}

pub fn edge_features_with(u: &[f64], v: &[f64], kind: FeatureKind) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(CoinError::Dimension(format!(
            "edge features from widths {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(match kind {
        FeatureKind::Hadamard => u.iter().zip(v).map(|(a, b)| a * b).collect(),
        FeatureKind::Concat => u.iter().chain(v).copied().collect(),
    })
}

/// Binary logistic regression `σ(w · x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// log σ(x), stable for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

impl LinkClassifier {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean log-likelihood minus `(l2 / 2) · |w|²`.
    pub fn objective(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let ll: f64 = features
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let z = self.logit(x);
                if y {
                    log_sigmoid(z)
                } else {
                    log_sigmoid(-z)
                }
            })
            .sum::<f64>()
            / features.len() as f64;
        ll - 0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

const GRAD_CHUNK: usize = 4096;

/// Full-batch gradient ascent on the regularized mean log-likelihood,
/// starting from zero. The bias is not regularized.
pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
    iterations: usize,
    lr: f64,
) -> Result<LinkClassifier> {
    if features.len() != labels.len() {
        return Err(CoinError::InvalidArgument(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(CoinError::InvalidArgument(
            "logistic regression needs both classes".into(),
        ));
    }
    let width = features[0].len();
    if features.iter().any(|x| x.len() != width) {
        return Err(CoinError::Dimension("feature rows have unequal widths".into()));
    }
    let n = features.len() as f64;
    let mut clf = LinkClassifier {
        weights: vec![0.0; width],
        bias: 0.0,
        l2,
    };
    for _ in 0..iterations {
        // Fixed chunking keeps the reduction order independent of thread count.
        let partials: Vec<(Vec<f64>, f64)> = features
            .par_chunks(GRAD_CHUNK)
            .zip(labels.par_chunks(GRAD_CHUNK))
            .map(|(xs, ys)| {
                let mut gw = vec![0.0; width];
                let mut gb = 0.0;
                for (x, &y) in xs.iter().zip(ys) {
                    let r = f64::from(u8::from(y)) - clf.predict_proba(x);
                    for (g, xi) in gw.iter_mut().zip(x) {
                        *g += r * xi;
                    }
                    gb += r;
                }
                (gw, gb)
            })
            .collect();
        let mut gw = vec![0.0; width];
        let mut gb = 0.0;
        for (pw, pb) in partials {
            gw.iter_mut().zip(&pw).for_each(|(a, b)| *a += b);
            gb += pb;
        }
        for (w, g) in clf.weights.iter_mut().zip(&gw) {
            *w += lr * (g / n - l2 * *w);
        }
        clf.bias += lr * gb / n;
    }
    Ok(clf)
}

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(CoinError::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CoinError::InvalidArgument("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Err(CoinError::InvalidArgument("AUC needs both classes present".into()));
    }
    Ok((pos, labels.len() - pos))
}

fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    order
}

/// Fraction of (positive, negative) pairs ranked correctly; ties count 0.5.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = check_binary(scores, labels)?;
    let order = descending(scores);
    // Walk tie groups from the top, counting negatives below each positive.
    let mut concordant = 0.0;
    let mut neg_above = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group = &order[i..j];
        let gp = group.iter().filter(|&&k| labels[k]).count();
        let gn = group.len() - gp;
        concordant += gp as f64 * (n_neg - neg_above - gn) as f64 + 0.5 * (gp * gn) as f64;
        neg_above += gn;
        i = j;
    }
    Ok(concordant / (n_pos as f64 * n_neg as f64))
}

/// Step-wise average precision `Σ (R_i − R_{i−1}) · P_i` over distinct
/// score thresholds.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, _) = check_binary(scores, labels)?;
    let order = descending(scores);
    let (mut tp, mut seen, mut prev_recall, mut ap) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            tp += usize::from(labels[order[j]]);
            j += 1;
        }
        seen += j - i;
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

/// Logistic-regression settings for the link-prediction protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkEvalConfig {
    pub feature: FeatureKind,
    pub l2: f64,
    pub iterations: usize,
    pub lr: f64,
}

impl Default for LinkEvalConfig {
    fn default() -> Self {
        Self {
            feature: FeatureKind::Hadamard,
            l2: 1e-4,
            iterations: 300,
            lr: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkMetrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
}

fn features_for(emb: &EmbeddingPair, pairs: &[(usize, usize)], kind: FeatureKind) -> Result<Vec<Vec<f64>>> {
    pairs
        .iter()
        .map(|&(u, v)| edge_features_with(emb.emb_u.row(u), emb.emb_v.row(v), kind))
        .collect()
}

/// Fits the classifier on training edges against an equal number of sampled
/// non-edges, then scores the held-out pairs.
pub fn evaluate_link_prediction<R: Rng + ?Sized>(
    emb: &EmbeddingPair,
    train: &BipartiteGraph,
    test_pos: &[(usize, usize)],
    test_neg: &[(usize, usize)],
    config: &LinkEvalConfig,
    rng: &mut R,
) -> Result<LinkMetrics> {
    if emb.emb_u.rows() != train.num_u() || emb.emb_v.rows() != train.num_v() {
        return Err(CoinError::Dimension(format!(
            "embeddings cover ({}, {}) nodes, graph has ({}, {})",
            emb.emb_u.rows(),
            emb.emb_v.rows(),
            train.num_u(),
            train.num_v()
        )));
    }
    let mut exclude: HashSet<(usize, usize)> = train.edges().iter().copied().collect();
    exclude.extend(test_pos.iter().chain(test_neg).copied());
    let free = (train.num_u() * train.num_v()).saturating_sub(exclude.len());
    let want = train.num_edges().min(free);
    let mut neg = Vec::with_capacity(want);
    let mut chosen = HashSet::with_capacity(want);
    while neg.len() < want {
        let p = (rng.random_range(0..train.num_u()), rng.random_range(0..train.num_v()));
        if !exclude.contains(&p) && chosen.insert(p) {
            neg.push(p);
        }
    }
    let mut x = features_for(emb, train.edges(), config.feature)?;
    x.extend(features_for(emb, &neg, config.feature)?);
    let y: Vec<bool> = (0..x.len()).map(|i| i < train.num_edges()).collect();
    let clf = fit_logistic(&x, &y, config.l2, config.iterations, config.lr)?;

    let mut test_x = features_for(emb, test_pos, config.feature)?;
    test_x.extend(features_for(emb, test_neg, config.feature)?);
    let labels: Vec<bool> = (0..test_x.len()).map(|i| i < test_pos.len()).collect();
    let scores: Vec<f64> = test_x.par_iter().map(|x| clf.logit(x)).collect();
    Ok(LinkMetrics {
        auc_roc: auc_roc(&scores, &labels)?,
        auc_pr: auc_pr(&scores, &labels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_features() {
        assert_eq!(edge_features(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert_eq!(edge_features(&[1.5, -2.0], &[1.0, 1.0]).unwrap(), vec![1.5, -2.0]);
        assert_eq!(
            edge_features(&[0.3, 2.0], &[-1.0, 4.0]).unwrap(),
            edge_features(&[-1.0, 4.0], &[0.3, 2.0]).unwrap()
        );
        assert!(edge_features(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(
            edge_features_with(&[1.0], &[2.0], FeatureKind::Concat).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn auc_examples() {
        let s = [0.9, 0.8, 0.3, 0.1];
        assert_eq!(auc_roc(&s, &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(auc_roc(&s, &[false, true, false, true]).unwrap(), 0.25);
        assert_eq!(auc_roc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert!(auc_roc(&s, &[true; 4]).is_err());
        assert_eq!(auc_pr(&s, &[true, true, false, false]).unwrap(), 1.0);
        // Hits at ranks 2 and 4: (1/2 + 2/4) / 2.
        assert!((auc_pr(&s, &[false, true, false, true]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separable_fit() {
        let x: Vec<Vec<f64>> = [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0].iter().map(|&v| vec![v]).collect();
        let y = [false, false, false, true, true, true];
        let clf = fit_logistic(&x, &y, 0.0, 500, 1.0).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| (clf.predict_proba(xi) > 0.5) == yi)
            .count();
        assert_eq!(acc, 6);
        assert!(fit_logistic(&x, &[true; 6], 0.0, 10, 1.0).is_err());
    }

    #[test]
    fn heavy_l2_shrinks_weights() {
        let x: Vec<Vec<f64>> = [-2.0, -1.0, 1.0, 2.0].iter().map(|&v| vec![v, 0.5 * v]).collect();
        let y = [false, false, true, true];
        let clf = fit_logistic(&x, &y, 1e4, 2000, 1e-4).unwrap();
        assert!(clf.weights.iter().all(|w| w.abs() < 1e-3));
        assert!(x.iter().all(|xi| (clf.predict_proba(xi) - 0.5).abs() < 1e-3));
    }
}
