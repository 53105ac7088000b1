//! Cross-regularization: regularization parameters trained by gradient descent
//! on a held-out regularization set, alternating with ordinary training of the
//! model parameters, plus grid-search reference solvers to compare against.
//!
//! Modules, bottom-up:
//! - [`numkit`]: matrices, seeded sampling, Cholesky solves, finite differences.
//! - [`datagen`]: synthetic problems, CSV loading, three-way splits.
//! - [`models`]: reparameterized linear model, B-splines, noisy MLP, univariate Gaussian.
//! - [`regops`]: gradient decomposition along complexity directions, shift augmentation.
//! - [`optim`]: optimizers and the alternating training loops.
//! - [`oracles`]: ridge, LASSO and penalized-spline grid searches.
//! - [`metrics`]: accuracy, calibration error, sample-size rate sweep.
//! - [`experiments`]: end-to-end experiment drivers shared by the CLI and tests.

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod models;
pub mod numkit;
pub mod optim;
pub mod oracles;
pub mod regops;

pub use error::{Error, Result};
