//! Optimizers and the cross-regularization training loops.

pub mod access;
pub mod config;
pub mod convergence;
pub mod linear;
pub mod noisy;
pub mod optimizer;
pub mod record;

pub use access::{AccessCounts, Partition, Phase, PhaseClock};
pub use config::TrainConfig;
pub use convergence::{measure_convergence, QuadraticGame, TAIL_FRACTION};
pub use linear::{train_l2, train_projected, Direction};
pub use noisy::{train_growth, train_noisy, NoisyTrainer};
pub use optimizer::{step, OptState, OptimizerKind};
pub use record::{EpochRow, RunRecord};
