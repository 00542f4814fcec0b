use rand::seq::SliceRandom;
use rand::Rng;

use super::{DirectedGraph, Edge};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub train: DirectedGraph,
    /// Removed edges, in removal order.
    pub held_out: Vec<Edge>,
    /// `floor(fraction · |E|)`; may exceed `held_out.len()` when the
    /// non-isolation constraint made the target unreachable.
    pub requested: usize,
}

impl SplitResult {
    pub fn is_short(&self) -> bool {
        self.held_out.len() < self.requested
    }
}

/// Removes `floor(removal_fraction · |E|)` random edges while keeping every
/// node's total degree at least one in the training graph.
///
/// Edges are visited in a seeded shuffle and removed greedily whenever
/// both endpoints would keep another incident edge. When the target cannot
/// be reached the split stops at exhaustion and a warning is logged.
pub fn split_link_prediction<R: Rng + ?Sized>(
    g: &DirectedGraph,
    removal_fraction: f64,
    rng: &mut R,
) -> Result<SplitResult> {
    if !(0.0..1.0).contains(&removal_fraction) {
        return Err(Error::InvalidArgument(format!(
            "removal fraction must lie in [0, 1), got {removal_fraction}"
        )));
    }
    let requested = (removal_fraction * g.edge_count() as f64).floor() as usize;
    let mut degree: Vec<usize> = (0..g.node_count()).map(|u| g.degree(u)).collect();
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.shuffle(rng);

    let mut removed = vec![false; g.edge_count()];
    let mut held_out = Vec::with_capacity(requested);
    for idx in order {
        if held_out.len() == requested {
            break;
        }
        let (u, v) = g.edges()[idx];
        if degree[u] >= 2 && degree[v] >= 2 {
            degree[u] -= 1;
            degree[v] -= 1;
            removed[idx] = true;
            held_out.push((u, v));
        }
    }
    if held_out.len() < requested {
        log::warn!(
            "split removed {} of {} requested edges without isolating a node",
            held_out.len(),
            requested
        );
    }
    let train = g.with_edges(
        g.edges()
            .iter()
            .zip(&removed)
            .filter(|(_, &r)| !r)
            .map(|(&e, _)| e),
    );
    Ok(SplitResult {
        train,
        held_out,
        requested,
    })
}

/// Keeps roughly `keep_ratio · |E|` edges of `g`, never isolating a node.
pub fn subsample_edges<R: Rng + ?Sized>(g: &DirectedGraph, keep_ratio: f64, rng: &mut R) -> Result<DirectedGraph> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "edge ratio must lie in (0, 1], got {keep_ratio}"
        )));
    }
    Ok(split_link_prediction(g, 1.0 - keep_ratio, rng)?.train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    /// Largest number of edges removable without isolating a node, by
    /// enumerating every subset.
    fn brute_force_max_removable(g: &DirectedGraph) -> usize {
        let m = g.edge_count();
        let mut best = 0;
        for mask in 0u32..(1 << m) {
            let mut degree: Vec<usize> = (0..g.node_count()).map(|u| g.degree(u)).collect();
            for (i, &(u, v)) in g.edges().iter().enumerate() {
                if mask & (1 << i) != 0 {
                    degree[u] -= 1;
                    degree[v] -= 1;
                }
            }
            if degree.iter().all(|&d| d >= 1) {
                best = best.max(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn zero_fraction_is_identity() {
        let g = DirectedGraph::from_simple_edges(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let s = split_link_prediction(&g, 0.0, &mut stream(1, "s")).unwrap();
        assert!(s.held_out.is_empty());
        assert_eq!(s.train.edges(), g.edges());
    }

    #[test]
    fn three_cycle_removes_one() {
        let g = DirectedGraph::from_simple_edges(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(brute_force_max_removable(&g), 1);
        for seed in 0..10 {
            let s = split_link_prediction(&g, 0.34, &mut stream(seed, "s")).unwrap();
            assert_eq!(s.held_out.len(), 1);
            assert!((0..3).all(|u| s.train.degree(u) >= 1));
        }
    }

    #[test]
    fn star_cannot_reach_target() {
        let g = DirectedGraph::from_simple_edges(6, (1..6).map(|y| (0, y))).unwrap();
        let best = brute_force_max_removable(&g);
        assert_eq!(best, 0);
        let s = split_link_prediction(&g, 0.9, &mut stream(2, "s")).unwrap();
        assert_eq!(s.requested, 4);
        assert_eq!(s.held_out.len(), best);
        assert!(s.is_short());
    }

    #[test]
    fn fraction_one_is_rejected() {
        let g = DirectedGraph::from_simple_edges(2, vec![(0, 1)]).unwrap();
        assert!(split_link_prediction(&g, 1.0, &mut stream(0, "s")).is_err());
        assert!(split_link_prediction(&g, -0.1, &mut stream(0, "s")).is_err());
        assert!(subsample_edges(&g, 0.0, &mut stream(0, "s")).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_edges_and_keeps_nodes(
            n in 2usize..15,
            raw in prop::collection::vec((0usize..15, 0usize..15), 1..80),
            fraction in 0.0f64..0.99,
            seed in any::<u64>(),
        ) {
            let edges: Vec<Edge> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let (g, _) = DirectedGraph::from_edges(n, edges).unwrap();
            prop_assume!(g.edge_count() > 0);
            let s = split_link_prediction(&g, fraction, &mut stream(seed, "s")).unwrap();
            prop_assert!(s.held_out.len() <= s.requested);
            prop_assert_eq!(s.train.edge_count() + s.held_out.len(), g.edge_count());
            for &(u, v) in &s.held_out {
                prop_assert!(g.has_edge(u, v));
                prop_assert!(!s.train.has_edge(u, v));
            }
            for &(u, v) in s.train.edges() {
                prop_assert!(g.has_edge(u, v));
            }
            for u in 0..n {
                if g.degree(u) >= 1 {
                    prop_assert!(s.train.degree(u) >= 1);
                }
            }
            let again = split_link_prediction(&g, fraction, &mut stream(seed, "s")).unwrap();
            prop_assert_eq!(again.held_out, s.held_out);
        }
    }
}
