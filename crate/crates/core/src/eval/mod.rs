//! Evaluation metrics and experiment protocols.

mod classify;
mod logreg;
mod metrics;
mod protocols;

pub use classify::{run_classification, ClassificationOptions, ClassificationRow};
pub use logreg::{logreg_objective, train_logreg, ClassifierParams};
pub use metrics::{auc, f1_scores, precision_at_k, score_pair};
pub use protocols::{
    evaluate_auc, run_link_prediction, run_sparsity_sweep, LinkPredictionRun, PairScorer, SparsityPoint,
};
