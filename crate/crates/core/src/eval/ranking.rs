use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::EmbeddingPair;
use crate::error::{CoinError, Result};
use crate::graph::BipartiteGraph;
use crate::objectives::ScorerParams;

/// How candidate items are scored for a user.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    /// The trained pair scorer.
    #[default]
    Mlp,
    Dot,
}

/// Top-K metrics of one ranked list, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TopKMetrics {
    pub f1: f64,
    pub ndcg: f64,
    pub map: f64,
    pub mrr: f64,
}

impl TopKMetrics {
    pub fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("f1", self.f1),
            ("ndcg", self.ndcg),
            ("map", self.map),
            ("mrr", self.mrr),
        ]
    }
}

/// Metrics at cutoff `k` for a ranked relevance list with `num_relevant`
/// relevant items overall.
pub fn topk_metrics(ranked: &[bool], num_relevant: usize, k: usize) -> TopKMetrics {
    if num_relevant == 0 || k == 0 {
        return TopKMetrics::default();
    }
    let top = &ranked[..k.min(ranked.len())];
    let hits = top.iter().filter(|&&r| r).count();
    let precision = hits as f64 / k as f64;
    let recall = hits as f64 / num_relevant as f64;
    let f1 = if hits == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let ideal = k.min(num_relevant);
    let dcg: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(i, _)| discount(i))
        .sum();
    let idcg: f64 = (0..ideal).map(discount).sum();
    let mut seen = 0;
    let mut ap = 0.0;
    for (i, _) in top.iter().enumerate().filter(|(_, &r)| r) {
        seen += 1;
        ap += seen as f64 / (i + 1) as f64;
    }
    let mrr = top.iter().position(|&r| r).map_or(0.0, |i| 1.0 / (i + 1) as f64);
    TopKMetrics {
        f1,
        ndcg: dcg / idcg,
        map: ap / ideal as f64,
        mrr,
    }
}

/// Indices sorted by descending score, ties broken by lower index,
/// skipping the sorted `exclude` list.
pub fn rank_items(scores: &[f64], exclude: &[usize]) -> Vec<usize> {
    let mut items: Vec<usize> = (0..scores.len())
        .filter(|i| exclude.binary_search(i).is_err())
        .collect();
    items.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    items
}

/// Scores every item for users, precomputing the item half of the MLP.
pub struct ItemScorer<'a> {
    emb: &'a EmbeddingPair,
    rule: ScoringRule,
    scorer: &'a ScorerParams,
    item_proj: Vec<f64>,
}

impl<'a> ItemScorer<'a> {
    pub fn new(emb: &'a EmbeddingPair, scorer: &'a ScorerParams, rule: ScoringRule) -> Result<Self> {
        let d = emb.d();
        let item_proj = match rule {
            ScoringRule::Dot => Vec::new(),
            ScoringRule::Mlp => {
                scorer.validate()?;
                if scorer.d() != d {
                    return Err(CoinError::Dimension(format!(
                        "scorer width {} vs embeddings {d}",
                        scorer.d()
                    )));
                }
                let bot = scorer.w1.slice_rows(d, 2 * d)?;
                emb.emb_v.matmul(&bot)?.into_data()
            }
        };
        Ok(Self {
            emb,
            rule,
            scorer,
            item_proj,
        })
    }

    pub fn scores(&self, u: usize) -> Vec<f64> {
        let d = self.emb.d();
        let urow = self.emb.emb_u.row(u);
        let nv = self.emb.emb_v.rows();
        match self.rule {
            ScoringRule::Dot => (0..nv)
                .map(|v| urow.iter().zip(self.emb.emb_v.row(v)).map(|(a, b)| a * b).sum())
                .collect(),
            ScoringRule::Mlp => {
                let w1 = &self.scorer.w1;
                let user: Vec<f64> = (0..d).map(|j| (0..d).map(|i| urow[i] * w1.get(i, j)).sum()).collect();
                let w2 = self.scorer.w2.data();
                (0..nv)
                    .map(|v| {
                        let proj = &self.item_proj[v * d..(v + 1) * d];
                        (0..d).map(|j| w2[j] * (user[j] + proj[j]).tanh()).sum()
                    })
                    .collect()
            }
        }
    }
}

/// Top-K metrics for one user at each cutoff in `ks`, or `None` when the
/// user has no test items.
pub fn rank_and_score(
    scorer: &ItemScorer<'_>,
    u: usize,
    ks: &[usize],
    train: &BipartiteGraph,
    test_items: &[usize],
) -> Option<Vec<TopKMetrics>> {
    if test_items.is_empty() {
        return None;
    }
    let scores = scorer.scores(u);
    let ranked = rank_items(&scores, train.neighbors_of_u(u));
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let relevance: Vec<bool> = ranked
        .iter()
        .take(max_k)
        .map(|v| test_items.binary_search(v).is_ok())
        .collect();
    Some(
        ks.iter()
            .map(|&k| topk_metrics(&relevance, test_items.len(), k))
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingResult {
    pub ks: Vec<usize>,
    /// `(user, metrics per K)` for every evaluated user.
    pub per_user: Vec<(usize, Vec<TopKMetrics>)>,
    pub skipped_users: usize,
}

impl RankingResult {
    /// Metrics averaged over evaluated users, one entry per K.
    pub fn mean(&self) -> Vec<TopKMetrics> {
        let n = self.per_user.len().max(1) as f64;
        (0..self.ks.len())
            .map(|i| {
                let mut m = TopKMetrics::default();
                for (_, per_k) in &self.per_user {
                    m.f1 += per_k[i].f1;
                    m.ndcg += per_k[i].ndcg;
                    m.map += per_k[i].map;
                    m.mrr += per_k[i].mrr;
                }
                TopKMetrics {
                    f1: m.f1 / n,
                    ndcg: m.ndcg / n,
                    map: m.map / n,
                    mrr: m.mrr / n,
                }
            })
            .collect()
    }

    /// `"{metric}@{k}"` → user-averaged value.
    pub fn named_means(&self) -> Vec<(String, f64)> {
        self.ks
            .iter()
            .zip(self.mean())
            .flat_map(|(k, m)| m.named().map(|(name, x)| (format!("{name}@{k}"), x)))
            .collect()
    }
}

/// Ranks all non-training items for every user that has test items.
pub fn evaluate_ranking(
    emb: &EmbeddingPair,
    scorer: &ScorerParams,
    rule: ScoringRule,
    train: &BipartiteGraph,
    test: &[(usize, usize)],
    ks: &[usize],
) -> Result<RankingResult> {
    if emb.emb_u.rows() != train.num_u() || emb.emb_v.rows() != train.num_v() {
        return Err(CoinError::Dimension(
            "embeddings do not match the training graph".into(),
        ));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(CoinError::InvalidArgument("K values must be positive".into()));
    }
    let mut test_items = vec![Vec::new(); train.num_u()];
    for &(u, v) in test {
        if u >= train.num_u() || v >= train.num_v() {
            return Err(CoinError::InvalidArgument(format!(
                "test pair ({u}, {v}) outside the graph"
            )));
        }
        test_items[u].push(v);
    }
    for items in &mut test_items {
        items.sort_unstable();
        items.dedup();
    }
    let item_scorer = ItemScorer::new(emb, scorer, rule)?;
    let results: Vec<Option<Vec<TopKMetrics>>> = (0..train.num_u())
        .into_par_iter()
        .map(|u| rank_and_score(&item_scorer, u, ks, train, &test_items[u]))
        .collect();
    let skipped_users = results.iter().filter(|r| r.is_none()).count();
    let per_user = results
        .into_iter()
        .enumerate()
        .filter_map(|(u, r)| r.map(|m| (u, m)))
        .collect();
    Ok(RankingResult {
        ks: ks.to_vec(),
        per_user,
        skipped_users,
    })
}
