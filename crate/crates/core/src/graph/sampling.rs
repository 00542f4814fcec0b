use rand::Rng;

use super::{DirectedGraph, Edge};

/// Draws `batch_size` edges uniformly with replacement.
pub fn sample_edge_batch<R: Rng + ?Sized>(g: &DirectedGraph, batch_size: usize, rng: &mut R) -> Vec<Edge> {
    let edges = g.edges();
    (0..batch_size)
        .map(|_| edges[rng.random_range(0..edges.len())])
        .collect()
}

/// Draws `batch_size` node ids uniformly with replacement.
pub fn sample_node_batch<R: Rng + ?Sized>(node_count: usize, batch_size: usize, rng: &mut R) -> Vec<usize> {
    (0..batch_size).map(|_| rng.random_range(0..node_count)).collect()
}
