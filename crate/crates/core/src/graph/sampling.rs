use rand::Rng;

use super::BipartiteGraph;
use crate::error::{CoinError, Result};

/// Draws `count` V-nodes uniformly (with replacement) from the complement
/// of `u`'s neighborhood.
pub fn sample_negatives<R: Rng + ?Sized>(
    u: usize,
    count: usize,
    graph: &BipartiteGraph,
    rng: &mut R,
) -> Result<Vec<usize>> {
    NegativeSampler::new(graph).sample(u, count, rng)
}

/// Reusable sampler over one graph.
#[derive(Clone, Copy, Debug)]
pub struct NegativeSampler<'g> {
    graph: &'g BipartiteGraph,
}

impl<'g> NegativeSampler<'g> {
    pub fn new(graph: &'g BipartiteGraph) -> Self {
        Self { graph }
    }

    pub fn sample<R: Rng + ?Sized>(&self, u: usize, count: usize, rng: &mut R) -> Result<Vec<usize>> {
        let g = self.graph;
        if u >= g.num_u() {
            return Err(CoinError::InvalidArgument(format!(
                "node {u} outside U of size {}",
                g.num_u()
            )));
        }
        let neighbors = g.neighbors_of_u(u);
        let free = g.num_v() - neighbors.len();
        if free == 0 {
            return Err(CoinError::InvalidArgument(format!(
                "node {u} is connected to every V-node; no negatives exist"
            )));
        }
        // Rejection is cheap while at least half of V is free.
        if 2 * free >= g.num_v() {
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let v = rng.random_range(0..g.num_v());
                if neighbors.binary_search(&v).is_err() {
                    out.push(v);
                }
            }
            return Ok(out);
        }
        let mut candidates = Vec::with_capacity(free);
        let mut next = neighbors.iter().peekable();
        for v in 0..g.num_v() {
            if next.peek() == Some(&&v) {
                next.next();
            } else {
                candidates.push(v);
            }
        }
        Ok((0..count)
            .map(|_| candidates[rng.random_range(0..candidates.len())])
            .collect())
    }
}
