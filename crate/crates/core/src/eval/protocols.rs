use super::metrics::auc;
use crate::graph::{build_test_set, split_link_prediction, subsample_edges, DirectedGraph, LabeledPairSet, SplitResult};
use crate::linalg::dot;
use crate::model::{DiscriminatorParams, GeneratorParams};
use crate::rng::stream;
use crate::train::{train, TrainConfig, TrainReport};
use crate::{Error, Result};

/// How a node pair is scored for ranking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairScorer {
    /// `s_u · t_v`
    #[default]
    Directed,
    /// `s_u · s_v`, blind to direction; used as a control.
    SourceSymmetric,
}

impl PairScorer {
    pub fn score(self, disc: &DiscriminatorParams, u: usize, v: usize) -> f64 {
        match self {
            PairScorer::Directed => disc.score(u, v),
            PairScorer::SourceSymmetric => dot(disc.source.row(u), disc.source.row(v)),
        }
    }
}

/// AUC of `scorer` on a labeled test set.
pub fn evaluate_auc(disc: &DiscriminatorParams, set: &LabeledPairSet, scorer: PairScorer) -> Result<f64> {
    let pos: Vec<f64> = set.positives().map(|p| scorer.score(disc, p.u, p.v)).collect();
    let neg: Vec<f64> = set.negatives().map(|p| scorer.score(disc, p.u, p.v)).collect();
    auc(&pos, &neg)
}

fn testset_stream_name(fraction: f64) -> String {
    format!("testset/{fraction}")
}

/// Test sets for each reversed fraction, each from its own named stream so
/// a fraction's negatives do not depend on which other fractions are asked
/// for.
pub(crate) fn build_test_sets(
    held_out: &[(usize, usize)],
    full: &DirectedGraph,
    reversed_fractions: &[f64],
    seed: u64,
) -> Result<Vec<(f64, LabeledPairSet)>> {
    reversed_fractions
        .iter()
        .map(|&f| Ok((f, build_test_set(held_out, full, f, &mut stream(seed, &testset_stream_name(f)))?)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct LinkPredictionRun {
    pub seed: u64,
    pub split: SplitResult,
    pub test_sets: Vec<(f64, LabeledPairSet)>,
    /// `(reversed_fraction, auc)` in the order requested.
    pub aucs: Vec<(f64, f64)>,
    pub disc: DiscriminatorParams,
    pub gen: GeneratorParams,
    pub report: TrainReport,
}

/// Split, train on the training graph, and score held-out positives
/// against each reversed-fraction negative set.
///
/// `seed` replaces `config.seed`; the split, training and test sets use
/// separate streams derived from it.
pub fn run_link_prediction(
    graph: &DirectedGraph,
    config: &TrainConfig,
    removal_fraction: f64,
    reversed_fractions: &[f64],
    seed: u64,
) -> Result<LinkPredictionRun> {
    if reversed_fractions.is_empty() {
        return Err(Error::InvalidArgument("no reversed fractions given".into()));
    }
    let split = split_link_prediction(graph, removal_fraction, &mut stream(seed, "split"))?;
    let test_sets = build_test_sets(&split.held_out, graph, reversed_fractions, seed)?;
    let config = TrainConfig { seed, ..config.clone() };
    let (disc, gen, report) = train(&split.train, &config)?;
    let aucs = test_sets
        .iter()
        .map(|(f, set)| Ok((*f, evaluate_auc(&disc, set, PairScorer::Directed)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkPredictionRun {
        seed,
        split,
        test_sets,
        aucs,
        disc,
        gen,
        report,
    })
}

/// Reversed fraction used by the sparsity sweep.
pub const SWEEP_REVERSED_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityPoint {
    pub edge_ratio: f64,
    pub train_edges: usize,
    pub auc: f64,
}

/// Retrains on random subsets of the training edges and reports AUC with
/// half of the eligible test positives reversed.
///
/// The split and test set are those of [`run_link_prediction`] for the
/// same seed, so ratio 1.0 reproduces its reversed = 0.5 result.
pub fn run_sparsity_sweep(
    graph: &DirectedGraph,
    config: &TrainConfig,
    removal_fraction: f64,
    train_edge_ratios: &[f64],
    seed: u64,
) -> Result<Vec<SparsityPoint>> {
    if train_edge_ratios.is_empty() {
        return Err(Error::InvalidArgument("no edge ratios given".into()));
    }
    if let Some(&bad) = train_edge_ratios.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidArgument(format!("edge ratio must lie in (0, 1], got {bad}")));
    }
    let split = split_link_prediction(graph, removal_fraction, &mut stream(seed, "split"))?;
    let (_, test_set) = build_test_sets(&split.held_out, graph, &[SWEEP_REVERSED_FRACTION], seed)?.remove(0);
    let config = TrainConfig { seed, ..config.clone() };
    train_edge_ratios
        .iter()
        .map(|&ratio| {
            let sub = subsample_edges(&split.train, ratio, &mut stream(seed, &format!("sparsity/{ratio}")))?;
            let (disc, _, _) = train(&sub, &config)?;
            Ok(SparsityPoint {
                edge_ratio: ratio,
                train_edges: sub.edge_count(),
                auc: evaluate_auc(&disc, &test_set, PairScorer::Directed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synthetic::one_way_bipartite;

    fn quick_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            n_epoch: epochs,
            batch_size: 64,
            lr_d: 1e-2,
            lr_g: 1e-2,
            ..TrainConfig::with_dim(16)
        }
    }

    #[test]
    fn untrained_embeddings_are_near_chance() {
        let g = one_way_bipartite(60, 60, 4, &mut stream(0, "g")).unwrap();
        let mut total = 0.0;
        for seed in 0..5 {
            let run = run_link_prediction(&g, &quick_config(0), 0.5, &[0.0], seed).unwrap();
            total += run.aucs[0].1;
        }
        let mean = total / 5.0;
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }

    #[test]
    fn ratio_one_matches_link_prediction() {
        let g = one_way_bipartite(30, 30, 4, &mut stream(1, "g")).unwrap();
        let config = quick_config(5);
        let lp = run_link_prediction(&g, &config, 0.5, &[0.0, 0.5], 3).unwrap();
        let sweep = run_sparsity_sweep(&g, &config, 0.5, &[1.0], 3).unwrap();
        assert_eq!(sweep[0].auc, lp.aucs[1].1);
        assert_eq!(sweep[0].train_edges, lp.split.train.edge_count());
    }

    #[test]
    fn sweep_rejects_bad_ratios() {
        let g = one_way_bipartite(10, 10, 2, &mut stream(1, "g")).unwrap();
        let config = quick_config(0);
        assert!(run_sparsity_sweep(&g, &config, 0.5, &[], 0).is_err());
        assert!(run_sparsity_sweep(&g, &config, 0.5, &[0.0], 0).is_err());
        assert!(run_sparsity_sweep(&g, &config, 0.5, &[1.2], 0).is_err());
    }
}
