//! Adversarial embedding of directed graphs.
//!
//! Every node carries a source vector and a target vector. A discriminator
//! scores a directed pair `(u, v)` by the sigmoid of `s_u · t_v`; two
//! generators that share one Gaussian latent per node produce fake source
//! and fake target neighbors which the discriminator learns to reject.
//!
//! The crate is organised as:
//!
//! * [`graph`]: edge-list loading, non-isolating splits, test-set
//!   construction and seeded sampling.
//! * [`model`]: parameters, forward passes, losses and analytic gradients.
//! * [`train`]: optimizers and the alternating training loop.
//! * [`eval`]: AUC, precision@k, one-vs-rest logistic regression, F1 and the
//!   experiment protocols built from them.
//! * [`cli`]: the `dggan` command-line front-end.

pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
