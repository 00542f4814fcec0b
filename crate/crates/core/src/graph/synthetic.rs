//! Seeded synthetic graphs for tests, benchmarks and sanity experiments.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{DirectedGraph, Edge};
use crate::{Error, Result};

fn check_capacity(n: usize, m: usize, capacity: usize) -> Result<()> {
    if n < 2 || m == 0 || m > capacity {
        return Err(Error::InvalidArgument(format!(
            "cannot place {m} edges on {n} nodes (capacity {capacity})"
        )));
    }
    Ok(())
}

/// Uniform random simple digraph with exactly `m` edges.
pub fn random_directed<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<DirectedGraph> {
    check_capacity(n, m, n * (n - 1).max(1))?;
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && seen.insert((u, v)) {
            edges.push((u, v));
        }
    }
    DirectedGraph::from_simple_edges(n, edges)
}

/// Random DAG: edges always point forward in a hidden random topological
/// order, so no reverse of an edge is ever an edge.
pub fn random_dag<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<DirectedGraph> {
    check_capacity(n, m, n * (n - 1) / 2)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let e = (order[lo], order[hi]);
        if seen.insert(e) {
            edges.push(e);
        }
    }
    DirectedGraph::from_simple_edges(n, edges)
}

/// Bipartite digraph where every edge runs from group A (`0..n_a`) to
/// group B (`n_a..n_a + n_b`). Each A node gets `out_degree` distinct
/// targets; B nodes left without an in-edge are attached to a random A node.
pub fn one_way_bipartite<R: Rng + ?Sized>(n_a: usize, n_b: usize, out_degree: usize, rng: &mut R) -> Result<DirectedGraph> {
    if n_a == 0 || n_b == 0 || out_degree == 0 || out_degree > n_b {
        return Err(Error::InvalidArgument(format!(
            "bad bipartite shape {n_a}x{n_b} with out-degree {out_degree}"
        )));
    }
    let mut edges: Vec<Edge> = Vec::with_capacity(n_a * out_degree);
    let mut covered = vec![false; n_b];
    for a in 0..n_a {
        for b in sample(rng, n_b, out_degree) {
            covered[b] = true;
            edges.push((a, n_a + b));
        }
    }
    for (b, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
        edges.push((rng.random_range(0..n_a), n_a + b));
    }
    DirectedGraph::from_simple_edges(n_a + n_b, edges)
}

/// One-way bipartite digraph with planted blocks. A (`0..n_a`) and B
/// (`n_a..n_a + n_b`) are each cut into `blocks` contiguous groups, and A
/// node `a` links to each B node of its own group with probability `p`.
/// Every node keeps at least one edge.
pub fn planted_bipartite<R: Rng + ?Sized>(n_a: usize, n_b: usize, blocks: usize, p: f64, rng: &mut R) -> Result<DirectedGraph> {
    if blocks == 0 || n_a < blocks || n_b < blocks || !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bad planted bipartite shape {n_a}x{n_b}, {blocks} blocks, p = {p}"
        )));
    }
    let group = |i: usize, n: usize| i * blocks / n;
    let members = |g: usize, n: usize| (0..n).filter(move |&i| group(i, n) == g);
    let mut edges: Vec<Edge> = Vec::new();
    let mut covered = vec![false; n_b];
    for a in 0..n_a {
        let mine: Vec<usize> = members(group(a, n_a), n_b).collect();
        let before = edges.len();
        for &b in &mine {
            if rng.random_bool(p) {
                covered[b] = true;
                edges.push((a, n_a + b));
            }
        }
        if edges.len() == before {
            let b = mine[rng.random_range(0..mine.len())];
            covered[b] = true;
            edges.push((a, n_a + b));
        }
    }
    for b in 0..n_b {
        if !covered[b] {
            let mine: Vec<usize> = members(group(b, n_b), n_a).collect();
            edges.push((mine[rng.random_range(0..mine.len())], n_a + b));
        }
    }
    DirectedGraph::from_simple_edges(n_a + n_b, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn generators_respect_shape() {
        let mut rng = stream(0, "syn");
        let g = random_directed(50, 200, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 200);

        let dag = random_dag(40, 150, &mut rng).unwrap();
        assert_eq!(dag.edge_count(), 150);
        assert_eq!(dag.bidirectional_edge_count(), 0);

        let bip = one_way_bipartite(100, 100, 5, &mut rng).unwrap();
        assert!(bip.edges().iter().all(|&(u, v)| u < 100 && v >= 100));
        assert!((0..200).all(|u| bip.degree(u) >= 1));

        let planted = planted_bipartite(100, 100, 4, 0.5, &mut rng).unwrap();
        assert!(planted.edges().iter().all(|&(u, v)| u < 100 && v >= 100 && u / 25 == (v - 100) / 25));
        assert!((0..200).all(|u| planted.degree(u) >= 1));
        assert!(planted_bipartite(100, 100, 4, 0.0, &mut rng).is_err());

        assert!(random_directed(3, 7, &mut rng).is_err());
        assert!(random_dag(3, 4, &mut rng).is_err());
    }
}
