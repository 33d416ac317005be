//! Bipartite graphs, the edge prior, dataset splits and label sets.

mod io;
mod sampling;
mod split;

use std::sync::Arc;

use coin_autodiff::SparseMatrix;

use crate::error::{CoinError, Result};

pub use io::{load_edge_list, load_labels, read_pairs, write_pairs, EdgeListData, IdMap, IdScheme, LabelSet, Side};
pub use sampling::{sample_negatives, NegativeSampler};
pub use split::{make_split, DatasetSplit};

/// Two-partition graph with row-normalized adjacency in both directions.
#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    num_u: usize,
    num_v: usize,
    edges: Vec<(usize, usize)>,
    adj_uv: Arc<SparseMatrix>,
    adj_vu: Arc<SparseMatrix>,
    // Unnormalized neighbor lists, sorted.
    neighbors_u: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph from `(u, v)` pairs. Duplicates collapse to one edge.
    pub fn from_edges(num_u: usize, num_v: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= num_u || v >= num_v) {
            return Err(CoinError::InvalidGraph(format!(
                "edge ({u}, {v}) outside partitions of size {num_u} and {num_v}"
            )));
        }
        edges.sort_unstable();
        edges.dedup();

        let uv: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let vu: Vec<_> = edges.iter().map(|&(u, v)| (v, u, 1.0)).collect();
        let adj_uv = SparseMatrix::from_triplets(num_u, num_v, &uv)?.row_normalized()?;
        let adj_vu = SparseMatrix::from_triplets(num_v, num_u, &vu)?.row_normalized()?;

        let mut neighbors_u = vec![Vec::new(); num_u];
        for &(u, v) in &edges {
            neighbors_u[u].push(v);
        }
        Ok(Self {
            num_u,
            num_v,
            edges,
            adj_uv: Arc::new(adj_uv),
            adj_vu: Arc::new(adj_vu),
            neighbors_u,
        })
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    /// Edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn adj_uv(&self) -> &Arc<SparseMatrix> {
        &self.adj_uv
    }

    pub fn adj_vu(&self) -> &Arc<SparseMatrix> {
        &self.adj_vu
    }

    /// Sorted V-neighbors of `u`.
    pub fn neighbors_of_u(&self, u: usize) -> &[usize] {
        &self.neighbors_u[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors_u.get(u).is_some_and(|n| n.binary_search(&v).is_ok())
    }

    /// Uniform prior over this graph's edges.
    pub fn edge_prior(&self) -> Result<EdgePrior> {
        EdgePrior::uniform(self)
    }
}

/// Mass `1/z` on every training edge and zero elsewhere.
#[derive(Clone, Debug)]
pub struct EdgePrior {
    z: usize,
    num_u: usize,
    num_v: usize,
    support: Vec<(usize, usize)>,
    matrix: Arc<SparseMatrix>,
}

impl EdgePrior {
    pub fn uniform(graph: &BipartiteGraph) -> Result<Self> {
        Self::over_edges(graph.num_u(), graph.num_v(), graph.edges())
    }

    /// Uniform prior over an arbitrary edge subset, e.g. a minibatch.
    pub fn over_edges(num_u: usize, num_v: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut support = edges.to_vec();
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(CoinError::InvalidArgument("edge prior needs at least one edge".into()));
        }
        let z = support.len();
        let mass = 1.0 / z as f64;
        let triplets: Vec<_> = support.iter().map(|&(u, v)| (u, v, mass)).collect();
        let matrix = SparseMatrix::from_triplets(num_u, num_v, &triplets)
            .map_err(|e| CoinError::InvalidArgument(format!("edge prior support does not fit the graph: {e}")))?;
        Ok(Self {
            z,
            num_u,
            num_v,
            support,
            matrix: Arc::new(matrix),
        })
    }

    /// Normalization constant: the number of support edges.
    pub fn z(&self) -> usize {
        self.z
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    pub fn mass(&self, u: usize, v: usize) -> f64 {
        if self.support.binary_search(&(u, v)).is_ok() {
            1.0 / self.z as f64
        } else {
            0.0
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.matrix.iter().map(|(_, _, m)| m).sum()
    }

    /// The prior as a sparse `|U| × |V|` matrix of masses.
    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.matrix
    }

    /// Marginal masses `p(u)` and `p(v)`.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pu = vec![0.0; self.num_u];
        let mut pv = vec![0.0; self.num_v];
        for (u, v, m) in self.matrix.iter() {
            pu[u] += m;
            pv[v] += m;
        }
        (pu, pv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_edges_collapse() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (0, 0), (1, 0)]).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert!(g.has_edge(1, 0));
        assert!(!g.has_edge(1, 1));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(BipartiteGraph::from_edges(2, 2, [(2, 0)]).is_err());
    }

    #[test]
    fn isolated_nodes_have_zero_rows() {
        let g = BipartiteGraph::from_edges(3, 2, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.adj_uv().row(2).0.len(), 0);
        assert_eq!(g.adj_uv().row(0).1, &[0.5, 0.5]);
        assert_eq!(g.adj_vu().row(1).1, &[1.0]);
    }

    #[test]
    fn prior_mass() {
        let g = BipartiteGraph::from_edges(2, 3, [(0, 0), (1, 2), (1, 1)]).unwrap();
        let p = g.edge_prior().unwrap();
        assert_eq!(p.z(), 3);
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(p.mass(1, 2), 1.0 / 3.0);
        assert_eq!(p.mass(0, 2), 0.0);
        let empty = BipartiteGraph::from_edges(2, 2, []).unwrap();
        assert!(empty.edge_prior().is_err());
    }
}
