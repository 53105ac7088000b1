//! Linear model written as magnitude times unit direction, `w = ρ·θ`.

use crate::error::{Error, Result};
use crate::numkit::{dot, norm, Matrix};
use serde::{Deserialize, Serialize};

/// Lower clamp for the magnitude `ρ`.
pub const RHO_MIN: f64 = 1e-8;

/// `w = rho · theta` with `‖theta‖₂ = 1` and `rho ≥ RHO_MIN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReparam {
    pub rho: f64,
    pub theta: Vec<f64>,
    pub bias: Option<f64>,
}

impl LinearReparam {
    /// Normalizes `direction` and clamps `rho`.
    pub fn new(rho: f64, direction: &[f64]) -> Result<Self> {
        let n = norm(direction);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("direction must be nonzero and finite".into()));
        }
        Ok(LinearReparam { rho: rho.max(RHO_MIN), theta: direction.iter().map(|v| v / n).collect(), bias: None })
    }

    /// Splits arbitrary weights into magnitude and direction.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        LinearReparam::new(norm(w), w)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Composed weights `rho · theta`.
    pub fn weights(&self) -> Vec<f64> {
        self.theta.iter().map(|t| self.rho * t).collect()
    }

    /// Rescales `theta` back to unit length.
    pub fn renormalize(&mut self) {
        let n = norm(&self.theta);
        if n > 0.0 {
            self.theta.iter_mut().for_each(|t| *t /= n);
        }
    }

    /// Mean squared error and its gradients `(loss, ∂/∂theta, ∂/∂rho)`.
    pub fn loss_grads(&self, x: &Matrix, y: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let (loss, gw) = mse_grad(x, y, &self.weights(), self.bias.unwrap_or(0.0))?;
        let g_rho = dot(&gw, &self.theta);
        let g_theta = gw.iter().map(|g| self.rho * g).collect();
        Ok((loss, g_theta, g_rho))
    }
}

/// `rho · X · theta + bias`.
pub fn linear_forward(m: &LinearReparam, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols != m.dim() {
        return Err(Error::Dimension(format!("X has {} columns, model has {}", x.cols, m.dim())));
    }
    let b = m.bias.unwrap_or(0.0);
    Ok((0..x.rows).map(|r| m.rho * dot(x.row(r), &m.theta) + b).collect())
}

/// `mean((ŷ − y)²)`.
pub fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
}

/// Mean squared error of `X w + bias` and its gradient in `w`.
pub fn mse_grad(x: &Matrix, y: &[f64], w: &[f64], bias: f64) -> Result<(f64, Vec<f64>)> {
    let mut r = x.matvec(w)?;
    let n = y.len() as f64;
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri += bias - yi;
    }
    let loss = dot(&r, &r) / n;
    let mut g = x.t_matvec(&r)?;
    g.iter_mut().for_each(|v| *v *= 2.0 / n);
    Ok((loss, g))
}
