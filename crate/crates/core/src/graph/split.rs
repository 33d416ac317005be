use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::BipartiteGraph;
use crate::error::{CoinError, Result};

/// Training graph plus held-out positive and negative pairs.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: BipartiteGraph,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

impl DatasetSplit {
    /// Assembles a split from precomputed parts, checking disjointness.
    pub fn from_parts(
        train: BipartiteGraph,
        test_pos: Vec<(usize, usize)>,
        test_neg: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let in_range = |&(u, v): &(usize, usize)| u < train.num_u() && v < train.num_v();
        if !test_pos.iter().chain(&test_neg).all(in_range) {
            return Err(CoinError::InvalidArgument("test pair outside the graph".into()));
        }
        if let Some(p) = test_pos.iter().find(|&&(u, v)| train.has_edge(u, v)) {
            return Err(CoinError::InvalidArgument(format!(
                "test positive {p:?} is a training edge"
            )));
        }
        let pos: HashSet<_> = test_pos.iter().copied().collect();
        if let Some(p) = test_neg
            .iter()
            .find(|&&(u, v)| train.has_edge(u, v) || pos.contains(&(u, v)))
        {
            return Err(CoinError::InvalidArgument(format!(
                "test negative {p:?} is a known edge"
            )));
        }
        Ok(Self {
            train,
            test_pos,
            test_neg,
        })
    }

    /// Samples `count` distinct pairs that are neither training edges nor
    /// test positives.
    pub fn sample_non_edges<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
        let exclude: HashSet<(usize, usize)> = self.train.edges().iter().chain(&self.test_pos).copied().collect();
        sample_pairs_outside(self.train.num_u(), self.train.num_v(), &exclude, count, rng)
    }
}

fn sample_pairs_outside<R: Rng + ?Sized>(
    num_u: usize,
    num_v: usize,
    exclude: &HashSet<(usize, usize)>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let free = (num_u * num_v).saturating_sub(exclude.len());
    if count > free {
        return Err(CoinError::InvalidArgument(format!(
            "asked for {count} non-edges but only {free} exist"
        )));
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pair = (rng.random_range(0..num_u), rng.random_range(0..num_v));
        if !exclude.contains(&pair) && chosen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Random edge split with `floor(train_fraction · |E|)` training edges and
/// `round(neg_ratio · |test_pos|)` sampled test negatives.
pub fn make_split<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    train_fraction: f64,
    neg_ratio: f64,
    rng: &mut R,
) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CoinError::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if !(neg_ratio >= 0.0) {
        return Err(CoinError::InvalidArgument(format!(
            "negative ratio must be >= 0, got {neg_ratio}"
        )));
    }
    let mut edges = graph.edges().to_vec();
    edges.shuffle(rng);
    let n_train = (train_fraction * edges.len() as f64).floor() as usize;
    let test_pos = edges.split_off(n_train);
    let train = BipartiteGraph::from_edges(graph.num_u(), graph.num_v(), edges)?;

    let exclude: HashSet<_> = graph.edges().iter().copied().collect();
    let n_neg = (neg_ratio * test_pos.len() as f64).round() as usize;
    let test_neg = sample_pairs_outside(graph.num_u(), graph.num_v(), &exclude, n_neg, rng)?;
    Ok(DatasetSplit {
        train,
        test_pos,
        test_neg,
    })
}
