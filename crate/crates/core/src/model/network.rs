use ndarray::{Array2, Array3};

use crate::error::{ensure, Result};

/// Directed binary multiplex network over a shared node set.
///
/// Self-loops are structurally absent. Besides the dense `L × N × N` bit
/// tensor, per-layer out- and in-neighbour lists are kept for the sparse
/// sums used throughout inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplexNetwork {
    num_layers: usize,
    num_nodes: usize,
    dense: Vec<bool>,
    out_adj: Vec<Vec<Vec<u32>>>,
    in_adj: Vec<Vec<Vec<u32>>>,
}

impl MultiplexNetwork {
    /// Builds a network from `(layer, source, target)` triples. Duplicate
    /// triples collapse into one edge.
    pub fn from_edges<I>(num_layers: usize, num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        ensure!(num_layers > 0 && num_nodes > 0, Domain, "network needs at least one layer and one node");
        ensure!(num_nodes <= u32::MAX as usize, Domain, "too many nodes");
        let mut dense = vec![false; num_layers * num_nodes * num_nodes];
        for (l, i, j) in edges {
            ensure!(l < num_layers, Invalid, "layer index {l} out of range (L = {num_layers})");
            ensure!(i < num_nodes && j < num_nodes, Invalid, "node index out of range in edge ({l}, {i}, {j})");
            ensure!(i != j, Invalid, "self-loop on node {i} in layer {l}");
            dense[(l * num_nodes + i) * num_nodes + j] = true;
        }
        Ok(Self::from_bits(num_layers, num_nodes, dense))
    }

    /// Builds a network from a dense 0/1 tensor indexed `(layer, source, target)`.
    pub fn from_dense(adjacency: &Array3<u8>) -> Result<Self> {
        let (l, n, n2) = adjacency.dim();
        ensure!(n == n2, Shape, "adjacency slices must be square, got {n}×{n2}");
        ensure!(l > 0 && n > 0, Domain, "network needs at least one layer and one node");
        let mut dense = vec![false; l * n * n];
        for ((layer, i, j), &v) in adjacency.indexed_iter() {
            ensure!(v <= 1, Invalid, "adjacency entries must be 0 or 1, got {v} at ({layer}, {i}, {j})");
            ensure!(!(i == j && v == 1), Invalid, "self-loop on node {i} in layer {layer}");
            dense[(layer * n + i) * n + j] = v == 1;
        }
        Ok(Self::from_bits(l, n, dense))
    }

    fn from_bits(num_layers: usize, num_nodes: usize, dense: Vec<bool>) -> Self {
        let mut out_adj = vec![vec![Vec::new(); num_nodes]; num_layers];
        let mut in_adj = vec![vec![Vec::new(); num_nodes]; num_layers];
        for l in 0..num_layers {
            for i in 0..num_nodes {
                let row = &dense[(l * num_nodes + i) * num_nodes..][..num_nodes];
                for (j, _) in row.iter().enumerate().filter(|(_, &b)| b) {
                    out_adj[l][i].push(j as u32);
                    in_adj[l][j].push(i as u32);
                }
            }
        }
        Self { num_layers, num_nodes, dense, out_adj, in_adj }
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn has_edge(&self, layer: usize, source: usize, target: usize) -> bool {
        self.dense[(layer * self.num_nodes + source) * self.num_nodes + target]
    }

    pub fn out_neighbors(&self, layer: usize, node: usize) -> &[u32] {
        &self.out_adj[layer][node]
    }

    pub fn in_neighbors(&self, layer: usize, node: usize) -> &[u32] {
        &self.in_adj[layer][node]
    }

    pub fn num_edges(&self, layer: usize) -> usize {
        self.out_adj[layer].iter().map(Vec::len).sum()
    }

    pub fn total_edges(&self) -> usize {
        (0..self.num_layers).map(|l| self.num_edges(l)).sum()
    }

    /// All edges as `(layer, source, target)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.num_layers).flat_map(move |l| {
            (0..self.num_nodes)
                .flat_map(move |i| self.out_adj[l][i].iter().map(move |&j| (l, i, j as usize)))
        })
    }

    /// One layer as a dense real matrix.
    pub fn layer_matrix(&self, layer: usize) -> Array2<f64> {
        let n = self.num_nodes;
        Array2::from_shape_fn((n, n), |(i, j)| if self.has_edge(layer, i, j) { 1.0 } else { 0.0 })
    }

    /// Entrywise sum of the layer adjacency matrices.
    pub fn aggregated_matrix(&self) -> Array2<f64> {
        let n = self.num_nodes;
        let mut agg = Array2::zeros((n, n));
        for (_, i, j) in self.edges() {
            agg[[i, j]] += 1.0;
        }
        agg
    }

    /// Restriction to a subset of layers, in the given order.
    pub fn select_layers(&self, layers: &[usize]) -> Result<Self> {
        ensure!(!layers.is_empty(), Domain, "layer selection is empty");
        ensure!(layers.iter().all(|&l| l < self.num_layers), Invalid, "layer selection out of range");
        let n = self.num_nodes;
        let mut dense = Vec::with_capacity(layers.len() * n * n);
        for &l in layers {
            dense.extend_from_slice(&self.dense[l * n * n..(l + 1) * n * n]);
        }
        Ok(Self::from_bits(layers.len(), n, dense))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_and_neighbours() {
        let net = MultiplexNetwork::from_edges(2, 3, [(0, 0, 1), (0, 2, 1), (1, 1, 0), (0, 0, 1)]).unwrap();
        assert_eq!(net.num_edges(0), 2);
        assert_eq!(net.total_edges(), 3);
        assert!(net.has_edge(0, 0, 1) && !net.has_edge(0, 1, 0));
        assert_eq!(net.in_neighbors(0, 1), &[0, 2]);
        assert_eq!(net.out_neighbors(1, 1), &[0]);
        assert_eq!(net.edges().collect::<Vec<_>>(), vec![(0, 0, 1), (0, 2, 1), (1, 1, 0)]);
        assert_eq!(net.aggregated_matrix()[[0, 1]], 1.0);
    }

    #[test]
    fn rejects_self_loops_and_bad_indices() {
        assert!(MultiplexNetwork::from_edges(1, 3, [(0, 1, 1)]).is_err());
        assert!(MultiplexNetwork::from_edges(1, 3, [(0, 1, 3)]).is_err());
        assert!(MultiplexNetwork::from_edges(1, 3, [(1, 1, 2)]).is_err());
        let mut dense = Array3::<u8>::zeros((1, 2, 2));
        dense[[0, 0, 0]] = 1;
        assert!(MultiplexNetwork::from_dense(&dense).is_err());
        dense[[0, 0, 0]] = 0;
        dense[[0, 0, 1]] = 2;
        assert!(MultiplexNetwork::from_dense(&dense).is_err());
    }

    #[test]
    fn select_layers_keeps_edges() {
        let net = MultiplexNetwork::from_edges(3, 2, [(0, 0, 1), (2, 1, 0)]).unwrap();
        let sub = net.select_layers(&[2, 2]).unwrap();
        assert_eq!(sub.num_layers(), 2);
        assert!(sub.has_edge(0, 1, 0) && sub.has_edge(1, 1, 0));
    }
}
