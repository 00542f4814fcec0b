//! One-vs-rest L2-regularized logistic regression, full-batch gradient
//! descent.

use std::collections::BTreeSet;

use crate::linalg::{dot, sigmoid, softplus, Matrix};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    /// One weight row per class.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl ClassifierParams {
    pub fn class_count(&self) -> usize {
        self.weights.rows()
    }

    /// Per-class probability that `x` belongs to it.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.class_count())
            .map(|c| sigmoid(dot(self.weights.row(c), x) + self.bias[c]))
            .collect()
    }

    /// Class with the highest one-vs-rest score (lowest id on ties).
    pub fn predict(&self, x: &[f64]) -> usize {
        let scores = self.scores(x);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }
}

/// Binary objective `mean log-loss + l2·‖w‖²/2` and its gradient with
/// respect to `(w, b)`; targets are 0/1. The bias is not regularized.
pub fn logreg_objective(features: &Matrix, targets: &[f64], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = features.rows() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let x = features.row(i);
        let z = dot(w, x) + b;
        // -[y log σ(z) + (1-y) log(1-σ(z))] = softplus(z) - y·z
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, xi) in grad_w.iter_mut().zip(x) {
            *g += r * xi;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
    }
    loss += 0.5 * l2 * dot(w, w);
    (loss, grad_w, grad_b)
}

/// Trains one binary classifier per class id in `0..=max(labels)`.
pub fn train_logreg(features: &Matrix, labels: &[usize], l2: f64, iters: usize, lr: f64) -> Result<ClassifierParams> {
    if features.rows() != labels.len() {
        return Err(Error::Shape(format!("{} feature rows for {} labels", features.rows(), labels.len())));
    }
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument("logistic regression needs at least two classes".into()));
    }
    if !(l2 >= 0.0 && lr > 0.0) {
        return Err(Error::InvalidArgument(format!("bad l2 {l2} or learning rate {lr}")));
    }
    let classes = *distinct.iter().next_back().unwrap() + 1;
    let dim = features.cols();
    let mut weights = Matrix::zeros(classes, dim);
    let mut bias = vec![0.0; classes];
    for c in 0..classes {
        let targets: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        for _ in 0..iters {
            let (_, gw, gb) = logreg_objective(features, &targets, &w, b, l2);
            for (wi, gi) in w.iter_mut().zip(&gw) {
                *wi -= lr * gi;
            }
            b -= lr * gb;
        }
        if !(w.iter().all(|x| x.is_finite()) && b.is_finite()) {
            return Err(Error::NonFinite(format!("classifier for class {c}")));
        }
        weights.row_mut(c).copy_from_slice(&w);
        bias[c] = b;
    }
    Ok(ClassifierParams { weights, bias, l2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn separable_two_points() {
        let x = Matrix::from_vec(2, 2, vec![1.0, 0.0, -1.0, 0.5]);
        let clf = train_logreg(&x, &[0, 1], 0.0, 2000, 0.5).unwrap();
        assert_eq!(clf.predict(x.row(0)), 0);
        assert_eq!(clf.predict(x.row(1)), 1);
    }

    #[test]
    fn heavy_regularization_flattens_scores() {
        let mut rng = stream(2, "lr");
        let x = Matrix::from_fn(30, 3, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
        // Balanced classes: bias settles at 0 and the weights are crushed.
        let clf = train_logreg(&x, &labels, 1e6, 200, 1e-7).unwrap();
        for c in 0..2 {
            assert!(clf.weights.row(c).iter().all(|w| w.abs() < 1e-6));
        }
        let clf = train_logreg(&x, &labels, 1e6, 500, 1e-6).unwrap();
        for s in clf.scores(x.row(0)) {
            assert!((s - 0.5).abs() < 1e-3, "{s}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream(9, "lr");
        let x = Matrix::from_fn(12, 4, |_, _| rng.random_range(-2.0..2.0));
        let y: Vec<f64> = (0..12).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let l2 = 0.05;
        let (_, gw, gb) = logreg_objective(&x, &y, &w, b, l2);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        for i in 0..4 {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let fd = (logreg_objective(&x, &y, &wp, b, l2).0 - logreg_objective(&x, &y, &wm, b, l2).0) / (2.0 * h);
            assert!(rel(gw[i], fd) < 1e-4);
        }
        let fd = (logreg_objective(&x, &y, &w, b + h, l2).0 - logreg_objective(&x, &y, &w, b - h, l2).0) / (2.0 * h);
        assert!(rel(gb, fd) < 1e-4);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::zeros(3, 2);
        assert!(train_logreg(&x, &[1, 1, 1], 0.0, 10, 0.1).is_err());
        assert!(train_logreg(&x, &[1, 0], 0.0, 10, 0.1).is_err());
    }
}
