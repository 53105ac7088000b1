//! Training configuration.

use super::OptimizerKind;
use crate::models::McSpace;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};


/// Hyperparameters shared by all cross-regularization loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_theta: f64,
    pub lr_rho: f64,
    /// Training steps between regularization updates.
    pub reg_interval: usize,
    /// Stochastic passes averaged per regularization batch.
    pub mc_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub rho_optimizer: OptimizerKind,
    /// Training steps completed before regularization updates may begin.
    pub reg_start_step: usize,
    pub seed: u64,
    /// Initial value of the regularization parameter(s) when the loop sets it.
    pub rho_init: f64,
    /// Whether the regularization parameters are updated at all.
    pub learn_rho: bool,
    /// Inject noise during training forwards.
    pub noise: bool,
    pub mc_space: McSpace,
    /// Upper bound for the augmentation magnitude.
    pub alpha_max: f64,
    /// Apply augmentation to test inputs as well.
    pub test_time_augment: bool,
    /// Epochs between full test evaluations (the last epoch is always evaluated).
    pub eval_every: usize,
    /// Loss above which a run is aborted.
    pub abort_loss: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_theta: 1e-4,
            lr_rho: 1e-1,
            reg_interval: 30,
            mc_samples: 3,
            epochs: 100,
            batch_size: 512,
            optimizer: OptimizerKind::adam(),
            rho_optimizer: OptimizerKind::adam(),
            reg_start_step: 0,
            seed: 0,
            rho_init: -3.0,
            learn_rho: true,
            noise: true,
            mc_space: McSpace::Probability,
            alpha_max: f64::INFINITY,
            test_time_augment: false,
            eval_every: 1,
            abort_loss: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reg_interval == 0 {
            return Err(Error::InvalidArgument("reg_interval must be >= 1".into()));
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidArgument("mc_samples must be >= 1".into()));
        }
        if !(self.lr_theta >= 0.0) || !(self.lr_rho >= 0.0) {
            return Err(Error::InvalidArgument("learning rates must be >= 0".into()));
        }
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidArgument("batch_size and eval_every must be >= 1".into()));
        }
        Ok(())
    }
}
