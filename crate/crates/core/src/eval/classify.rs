use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::logreg::train_logreg;
use super::metrics::f1_scores;
use crate::graph::NodeLabels;
use crate::linalg::Matrix;
use crate::model::DiscriminatorParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationOptions {
    pub repeats: usize,
    pub l2: f64,
    pub iters: usize,
    pub lr: f64,
    /// Permute the labels before splitting (null-model control).
    pub shuffle_labels: bool,
    /// Attempts at drawing a training split with two or more classes.
    pub max_retries: usize,
}

impl Default for ClassificationOptions {
    fn default() -> Self {
        ClassificationOptions {
            repeats: 10,
            l2: 1e-4,
            iters: 500,
            lr: 0.1,
            shuffle_labels: false,
            max_retries: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationRow {
    pub train_ratio: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

/// `[s_u ; t_u]` for each node.
fn features(disc: &DiscriminatorParams, nodes: &[usize]) -> Matrix {
    let d = disc.dim();
    let mut m = Matrix::zeros(nodes.len(), 2 * d);
    for (i, &u) in nodes.iter().enumerate() {
        let row = m.row_mut(i);
        row[..d].copy_from_slice(disc.source.row(u));
        row[d..].copy_from_slice(disc.target.row(u));
    }
    m
}

/// Standardizes columns of `train` and `test` with the training-split
/// mean and standard deviation.
fn standardize(train: &mut Matrix, test: &mut Matrix) {
    let n = train.rows() as f64;
    for c in 0..train.cols() {
        let mean = (0..train.rows()).map(|r| train.get(r, c)).sum::<f64>() / n;
        let var = (0..train.rows()).map(|r| (train.get(r, c) - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for m in [&mut *train, &mut *test] {
            for r in 0..m.rows() {
                m.set(r, c, (m.get(r, c) - mean) / sd);
            }
        }
    }
}

/// Node-classification protocol: for each training ratio, `repeats` random
/// splits of the labeled nodes, a one-vs-rest classifier on the
/// concatenated source/target vectors, and F1 on the held-out nodes,
/// averaged over repeats.
pub fn run_classification<R: Rng + ?Sized>(
    disc: &DiscriminatorParams,
    labels: &NodeLabels,
    train_ratios: &[f64],
    options: &ClassificationOptions,
    rng: &mut R,
) -> Result<Vec<ClassificationRow>> {
    let nodes: Vec<usize> = labels.assignments.keys().copied().collect();
    let truth: Vec<usize> = labels.assignments.values().copied().collect();
    if nodes.len() < 2 || truth.iter().collect::<BTreeSet<_>>().len() < 2 {
        return Err(Error::InvalidArgument("classification needs labeled nodes from at least two classes".into()));
    }
    if let Some(&u) = nodes.iter().find(|&&u| u >= disc.node_count()) {
        return Err(Error::Shape(format!("labeled node {u} has no embedding")));
    }
    if options.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(train_ratios.len());
    for &ratio in train_ratios {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("training ratio must lie in (0, 1), got {ratio}")));
        }
        let n_train = ((ratio * nodes.len() as f64).round() as usize).clamp(1, nodes.len() - 1);
        let (mut micro, mut macro_) = (0.0, 0.0);
        for _ in 0..options.repeats {
            let mut y = truth.clone();
            if options.shuffle_labels {
                y.shuffle(rng);
            }
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            let mut attempts = 0;
            loop {
                order.shuffle(rng);
                let classes: BTreeSet<usize> = order[..n_train].iter().map(|&i| y[i]).collect();
                if classes.len() >= 2 {
                    break;
                }
                attempts += 1;
                if attempts >= options.max_retries {
                    return Err(Error::InvalidArgument(format!(
                        "no training split with two classes at ratio {ratio} after {attempts} attempts"
                    )));
                }
            }
            let (train_idx, test_idx) = order.split_at(n_train);
            let pick = |idx: &[usize]| -> (Vec<usize>, Vec<usize>) {
                (idx.iter().map(|&i| nodes[i]).collect(), idx.iter().map(|&i| y[i]).collect())
            };
            let (train_nodes, train_y) = pick(train_idx);
            let (test_nodes, test_y) = pick(test_idx);
            let mut x_train = features(disc, &train_nodes);
            let mut x_test = features(disc, &test_nodes);
            standardize(&mut x_train, &mut x_test);
            let clf = train_logreg(&x_train, &train_y, options.l2, options.iters, options.lr)?;
            let predicted: Vec<usize> = (0..x_test.rows()).map(|r| clf.predict(x_test.row(r))).collect();
            let (mi, ma) = f1_scores(&predicted, &test_y)?;
            micro += mi;
            macro_ += ma;
        }
        let k = options.repeats as f64;
        rows.push(ClassificationRow {
            train_ratio: ratio,
            micro_f1: micro / k,
            macro_f1: macro_ / k,
        });
    }
    Ok(rows)
}
