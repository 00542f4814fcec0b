use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::graph::DirectedGraph;
use crate::model::DiscriminatorParams;
use crate::{Error, Result};

/// Directed proximity `s_u · t_v`, the discriminator's logit.
#[inline]
pub fn score_pair(disc: &DiscriminatorParams, u: usize, v: usize) -> f64 {
    disc.score(u, v)
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs in which
/// the positive scores higher, ties counting one half.
///
/// Counts are accumulated as integers so the result is the exact quotient
/// `(greater + ties/2) / (|pos|·|neg|)`.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("AUC needs at least one positive and one negative score".into()));
    }
    if pos.iter().chain(neg).any(|x| x.is_nan()) {
        return Err(Error::NonFinite("AUC input score".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut doubled: u128 = 0;
    for &p in pos {
        let below = sorted.partition_point(|&x| x < p);
        let not_above = sorted.partition_point(|&x| x <= p);
        doubled += 2 * below as u128 + (not_above - below) as u128;
    }
    Ok(doubled as f64 / 2.0 / (pos.len() as f64 * neg.len() as f64))
}

/// Mean precision@k over `sources` for every `k` in `k_values`.
///
/// Each source ranks every other node by `s_u · t_v` (descending, ties by
/// ascending id) and counts how many of its top `k` are out-neighbors in
/// `graph`. The denominator is always `k`.
pub fn precision_at_k(
    disc: &DiscriminatorParams,
    graph: &DirectedGraph,
    sources: &[usize],
    k_values: &[usize],
) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if disc.node_count() != n {
        return Err(Error::Shape(format!("{} embedded nodes for a {n}-node graph", disc.node_count())));
    }
    if sources.is_empty() || k_values.is_empty() {
        return Err(Error::InvalidArgument("precision@k needs sources and k values".into()));
    }
    let k_max = *k_values.iter().max().unwrap();
    if k_values.contains(&0) || k_max > n - 1 {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={}, got {k_max}", n - 1)));
    }
    if let Some(&bad) = sources.iter().find(|&&u| u >= n || graph.out_degree(u) == 0) {
        return Err(Error::InvalidArgument(format!("source {bad} is out of range or has no out-edges")));
    }

    let per_source: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|&u| {
            let mut ranked: Vec<(f64, usize)> = (0..n).filter(|&v| v != u).map(|v| (disc.score(u, v), v)).collect();
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if k_max < ranked.len() {
                ranked.select_nth_unstable_by(k_max - 1, order);
                ranked.truncate(k_max);
            }
            ranked.sort_by(order);
            let truth: BTreeSet<usize> = graph.out_neighbors(u).iter().copied().collect();
            let mut hits = Vec::with_capacity(k_max);
            let mut acc = 0usize;
            for &(_, v) in &ranked {
                acc += usize::from(truth.contains(&v));
                hits.push(acc);
            }
            k_values.iter().map(|&k| hits[k - 1] as f64 / k as f64).collect()
        })
        .collect();

    let m = sources.len() as f64;
    Ok((0..k_values.len())
        .map(|i| per_source.iter().map(|p| p[i]).sum::<f64>() / m)
        .collect())
}

/// Micro- and macro-averaged F1 for single-label multi-class predictions.
///
/// Macro averages over every class that occurs in either `truth` or
/// `predicted`; a class that is predicted but never true contributes 0.
pub fn f1_scores(predicted: &[usize], truth: &[usize]) -> Result<(f64, f64)> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let classes: BTreeSet<usize> = predicted.iter().chain(truth).copied().collect();
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    let mut macro_sum = 0.0;
    for &c in &classes {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        macro_sum += f1(tp, fp, fn_);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    Ok((f1(tp_all, fp_all, fn_all), macro_sum / classes.len() as f64))
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in pos {
            for n in neg {
                if p > n {
                    s += 1.0;
                } else if p == n {
                    s += 0.5;
                }
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5], &[0.5]).unwrap(), 0.5);
        assert_eq!(brute_auc(&[0.8, 0.3], &[0.5, 0.1]), 0.75);
        assert_eq!(auc(&[0.8, 0.3], &[0.5, 0.1]).unwrap(), 0.75);
        assert!(auc(&[], &[1.0]).is_err());
        assert!(auc(&[1.0], &[]).is_err());
        assert!(auc(&[f64::NAN], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn auc_equals_brute_force(
            pos in prop::collection::vec(-5i32..5, 1..40),
            neg in prop::collection::vec(-5i32..5, 1..40),
        ) {
            // Small integer grid forces plenty of ties.
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
            prop_assert_eq!(auc(&pos, &neg).unwrap(), brute_auc(&pos, &neg));
        }

        #[test]
        fn auc_invariant_under_monotone_transform(
            pos in prop::collection::vec(-3.0f64..3.0, 1..30),
            neg in prop::collection::vec(-3.0f64..3.0, 1..30),
        ) {
            let sig = |v: &[f64]| v.iter().map(|&x| crate::linalg::sigmoid(x)).collect::<Vec<_>>();
            prop_assert_eq!(auc(&pos, &neg).unwrap(), auc(&sig(&pos), &sig(&neg)).unwrap());
        }
    }

    #[test]
    fn score_pair_is_asymmetric() {
        // s_0·t_1 = 1, s_1·t_0 = -1
        let disc = DiscriminatorParams::new(
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, -1.0]),
            Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(score_pair(&disc, 0, 1), 1.0);
        assert_eq!(score_pair(&disc, 1, 0), -1.0);
        assert_eq!(score_pair(&disc, 0, 1), crate::model::raw_score(disc.source.row(0), disc.target.row(1)));
        let zero = DiscriminatorParams::new(Matrix::zeros(2, 2), Matrix::zeros(2, 2)).unwrap();
        assert_eq!(score_pair(&zero, 0, 1), 0.0);
    }

    /// Scores s_0·t_v = prescribed values via one-dimensional embeddings.
    fn ranked_disc(scores: &[f64]) -> DiscriminatorParams {
        let n = scores.len();
        let mut s = Matrix::zeros(n, 1);
        s.set(0, 0, 1.0);
        let t = Matrix::from_vec(n, 1, scores.to_vec());
        DiscriminatorParams::new(s, t).unwrap()
    }

    #[test]
    fn precision_hand_example() {
        // Ranking from node 0: 1, 5, 2, 3, 4; out-neighbors {1, 2}.
        let disc = ranked_disc(&[0.0, 0.9, 0.7, 0.5, 0.4, 0.8]);
        let g = DirectedGraph::from_simple_edges(6, vec![(0, 1), (0, 2), (3, 4)]).unwrap();
        let p = precision_at_k(&disc, &g, &[0], &[1, 3, 5]).unwrap();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[2] - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn precision_ties_break_by_id() {
        let disc = ranked_disc(&[0.0, 0.5, 0.5, 0.5]);
        let g = DirectedGraph::from_simple_edges(4, vec![(0, 2)]).unwrap();
        assert_eq!(precision_at_k(&disc, &g, &[0], &[1, 2]).unwrap(), vec![0.0, 0.5]);
    }

    #[test]
    fn precision_errors() {
        let disc = ranked_disc(&[0.0, 1.0, 2.0]);
        let g = DirectedGraph::from_simple_edges(3, vec![(0, 1)]).unwrap();
        assert!(precision_at_k(&disc, &g, &[0], &[3]).is_err());
        assert!(precision_at_k(&disc, &g, &[1], &[1]).is_err());
        assert!(precision_at_k(&disc, &g, &[0], &[0]).is_err());
    }

    #[test]
    fn precision_matches_full_sort_oracle() {
        let mut rng = stream(17, "pk");
        for trial in 0..20 {
            let n = rng.random_range(5..=100);
            let g = crate::graph::synthetic::random_directed(n, 3 * n, &mut rng).unwrap();
            let d = 4;
            let disc = DiscriminatorParams::new(
                Matrix::from_fn(n, d, |_, _| f64::from(rng.random_range(-3i32..3))),
                Matrix::from_fn(n, d, |_, _| f64::from(rng.random_range(-3i32..3))),
            )
            .unwrap();
            let sources: Vec<usize> = (0..n).filter(|&u| g.out_degree(u) > 0).collect();
            let ks: Vec<usize> = [1, 2, 3, 5, 10].into_iter().filter(|&k| k < n).collect();
            let got = precision_at_k(&disc, &g, &sources, &ks).unwrap();
            for (i, &k) in ks.iter().enumerate() {
                let mut total = 0.0;
                for &u in &sources {
                    let mut all: Vec<usize> = (0..n).filter(|&v| v != u).collect();
                    all.sort_by(|&a, &b| disc.score(u, b).partial_cmp(&disc.score(u, a)).unwrap().then(a.cmp(&b)));
                    let hits = all[..k].iter().filter(|&&v| g.has_edge(u, v)).count();
                    total += hits as f64 / k as f64;
                }
                let want = total / sources.len() as f64;
                assert!((got[i] - want).abs() < 1e-12, "trial {trial} k {k}");
                let outdeg: usize = sources.iter().map(|&u| g.out_degree(u)).sum();
                assert!(got[i] * k as f64 * sources.len() as f64 <= outdeg as f64 + 1e-9);
                assert!((0.0..=1.0).contains(&got[i]));
            }
        }
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_scores(&[0, 1, 2], &[0, 1, 2]).unwrap(), (1.0, 1.0));
        let (micro, macro_) = f1_scores(&[0, 1, 1], &[0, 0, 1]).unwrap();
        assert!((micro - 2.0 / 3.0).abs() < 1e-15);
        assert!((macro_ - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_scores(&[4, 4], &[4, 4]).unwrap().0, 1.0);
        // Class 2 predicted but absent from truth contributes F1 = 0.
        let (_, macro_) = f1_scores(&[0, 2], &[0, 0]).unwrap();
        assert!((macro_ - (2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(f1_scores(&[0], &[0, 1]).is_err());
        assert!(f1_scores(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn micro_f1_is_accuracy(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..60)) {
            let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let acc = pred.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64;
            let (micro, _) = f1_scores(&pred, &truth).unwrap();
            prop_assert!((micro - acc).abs() < 1e-12);
        }
    }
}
