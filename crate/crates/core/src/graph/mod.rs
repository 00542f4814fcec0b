//! Directed graphs, loaders, link-prediction splits and seeded sampling.

mod io;
mod sampling;
mod split;
pub mod synthetic;
mod testset;

use std::collections::HashSet;

pub use io::{load_edge_list, load_labels, parse_edge_list, Delimiter, LoadedGraph, NodeIdMap, NodeLabels};
pub use sampling::{sample_edge_batch, sample_node_batch};
pub use split::{split_link_prediction, subsample_edges, SplitResult};
pub use testset::{build_test_set, read_split_manifest, write_split_manifest, LabeledPair, LabeledPairSet, PairKind, SplitManifest};

use crate::{Error, Result};

pub type Edge = (usize, usize);

/// Simple directed graph over dense ids `0..node_count`.
///
/// Immutable once built. Self-loops and duplicate edges are dropped at
/// construction time and counted in [`BuildStats`].
#[derive(Clone, Debug)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    edge_set: HashSet<Edge>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl DirectedGraph {
    /// Builds a graph, dropping self-loops and repeated edges (first
    /// occurrence wins, edge order is otherwise preserved).
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<(Self, BuildStats)> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut stats = BuildStats::default();
        let mut kept = Vec::new();
        let mut edge_set = HashSet::new();
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) outside node range 0..{node_count}"
                )));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            if !edge_set.insert((u, v)) {
                stats.duplicates += 1;
                continue;
            }
            kept.push((u, v));
            out_adj[u].push(v);
            in_adj[v].push(u);
        }
        Ok((
            DirectedGraph {
                node_count,
                edges: kept,
                out_adj,
                in_adj,
                edge_set,
            },
            stats,
        ))
    }

    /// Like [`from_edges`](Self::from_edges) but rejects self-loops and
    /// duplicates instead of dropping them.
    pub fn from_simple_edges(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let (g, stats) = Self::from_edges(node_count, edges)?;
        if stats != BuildStats::default() {
            return Err(Error::InvalidArgument(format!(
                "edge list is not simple ({} self-loops, {} duplicates)",
                stats.self_loops, stats.duplicates
            )));
        }
        Ok(g)
    }

    /// Same node set, edges restricted to `edges` (which must be a subset).
    pub(crate) fn with_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Self {
        Self::from_edges(self.node_count, edges)
            .expect("subset of a valid graph")
            .0
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_set.contains(&(u, v))
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_adj[u]
    }

    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        &self.in_adj[u]
    }

    #[inline]
    pub fn out_degree(&self, u: usize) -> usize {
        self.out_adj[u].len()
    }

    #[inline]
    pub fn in_degree(&self, u: usize) -> usize {
        self.in_adj[u].len()
    }

    /// In-degree plus out-degree.
    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.out_degree(u) + self.in_degree(u)
    }

    /// Number of edges `(u, v)` whose reverse `(v, u)` is also an edge.
    pub fn bidirectional_edge_count(&self) -> usize {
        self.edges.iter().filter(|&&(u, v)| self.has_edge(v, u)).count()
    }

    pub fn summary(&self) -> GraphSummary {
        let n = self.node_count;
        GraphSummary {
            nodes: n,
            edges: self.edge_count(),
            avg_degree: 2.0 * self.edge_count() as f64 / n as f64,
            zero_in: (0..n).filter(|&u| self.in_degree(u) == 0).count(),
            zero_out: (0..n).filter(|&u| self.out_degree(u) == 0).count(),
            isolated: (0..n).filter(|&u| self.degree(u) == 0).count(),
            bidirectional: self.bidirectional_edge_count(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    /// Mean total degree, `2|E| / |V|`.
    pub avg_degree: f64,
    pub zero_in: usize,
    pub zero_out: usize,
    pub isolated: usize,
    pub bidirectional: usize,
}
