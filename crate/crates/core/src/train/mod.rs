//! Alternating discriminator/generator training.

mod optimizer;
mod scaling;
mod trainer;

pub use optimizer::{optimizer_step, Grad, OptimizerKind, OptimizerState, TensorState};
pub use scaling::{linear_fit, measure_epoch_scaling, LinearFit, ScalingPoint};
pub use trainer::{train, train_with_hook, Phase, Schedule, TrainConfig, TrainRecord, TrainReport, Trainer};
