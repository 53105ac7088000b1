//! Univariate Gaussian regression `y | x ∼ N(w x, σ²)`.

use serde::{Deserialize, Serialize};

/// Slope and noise scale of the univariate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianUnivariate {
    pub w: f64,
    pub sigma: f64,
}

/// Mean negative log-likelihood and its gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNll {
    pub loss: f64,
    pub d_w: f64,
    pub d_log_sigma: f64,
}

/// Mean over samples of `log σ + (y − w x)²/(2σ²) + ½ log 2π`.
pub fn gaussian_nll(g: &GaussianUnivariate, x: &[f64], y: &[f64]) -> GaussianNll {
    let n = x.len() as f64;
    let s2 = g.sigma * g.sigma;
    let (mut loss, mut d_w, mut d_ls) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - g.w * xi;
        loss += g.sigma.ln() + r * r / (2.0 * s2);
        d_w -= xi * r / s2;
        d_ls += 1.0 - r * r / s2;
    }
    GaussianNll {
        loss: loss / n + 0.5 * (2.0 * std::f64::consts::PI).ln(),
        d_w: d_w / n,
        d_log_sigma: d_ls / n,
    }
}
