//! Model families with analytic gradients.

pub mod checkpoint;
pub mod gaussian;
pub mod linear;
pub mod mlp;
pub mod spline;

pub use checkpoint::Checkpoint;
pub use gaussian::{gaussian_nll, GaussianNll, GaussianUnivariate};
pub use linear::{linear_forward, mse, mse_grad, LinearReparam, RHO_MIN};
pub use mlp::{mlp_forward, mc_predict, McOutput, McSpace, MlpGrads, Noise, NoisyMlp};
pub use spline::{bspline_design, second_diff_matrix, SplineModel};
