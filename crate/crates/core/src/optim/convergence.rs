//! Linear-rate estimation and a strongly convex two-block quadratic on which
//! the alternating scheme can be run with known constants.

use crate::error::{Error, Result};
use crate::metrics::ols_slope;
use crate::numkit::{dot, norm, solve_spd, Matrix, Rng};

/// Default share of the trace (from the end) used by [`measure_convergence`].
pub const TAIL_FRACTION: f64 = 0.8;

/// Per-step contraction factor `exp(slope)` of a least-squares fit of
/// `ln error` against step over the last `tail` share of the trace.
pub fn measure_convergence(trace: &[f64], tail: f64) -> Result<f64> {
    if trace.len() < 20 {
        return Err(Error::InvalidArgument(format!("need at least 20 errors, got {}", trace.len())));
    }
    if trace.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("errors must be positive".into()));
    }
    if !(tail > 0.0 && tail <= 1.0) {
        return Err(Error::InvalidArgument(format!("tail fraction {tail} outside (0, 1]")));
    }
    let n = trace.len();
    let start = n - ((n as f64 * tail).round() as usize).clamp(2, n);
    let x: Vec<f64> = (start..n).map(|i| i as f64).collect();
    let y: Vec<f64> = trace[start..].iter().map(|e| e.ln()).collect();
    Ok(ols_slope(&x, &y).exp())
}

/// `L_train(z) = ½ zᵀHz − b_trainᵀz`, `L_reg(z) = ½ zᵀHz − b_regᵀz` with
/// `z = (θ, ρ)`. `H` has prescribed eigenvalues, so the strong-convexity
/// constants of both blocks are bounded below by `λ_min(H)` and the
/// smoothness constant is `λ_max(H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    pub h: Matrix,
    pub b_train: Vec<f64>,
    pub b_reg: Vec<f64>,
    pub dim_theta: usize,
    /// Lower bound on the θ-block curvature of the training loss.
    pub mu: f64,
    /// Lower bound on the ρ-block curvature of the regularization loss.
    pub alpha: f64,
    /// Smoothness constant.
    pub beta: f64,
}

impl QuadraticGame {
    /// Random orthogonal eigenbasis with eigenvalues evenly spread on
    /// `[lambda_min, lambda_max]`.
    pub fn random(dim_theta: usize, dim_rho: usize, lambda_min: f64, lambda_max: f64, rng: &mut Rng) -> Result<Self> {
        let n = dim_theta + dim_rho;
        if dim_theta == 0 || dim_rho == 0 || !(0.0 < lambda_min && lambda_min <= lambda_max) {
            return Err(Error::InvalidArgument("need nonempty blocks and 0 < lambda_min <= lambda_max".into()));
        }
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        while q.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            for u in &q {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                q.push(v.into_iter().map(|a| a / nv).collect());
            }
        }
        let eig: Vec<f64> = (0..n)
            .map(|i| if n == 1 { lambda_min } else { lambda_min + (lambda_max - lambda_min) * i as f64 / (n - 1) as f64 })
            .collect();
        let mut h = Matrix::zeros(n, n);
        for (e, u) in eig.iter().zip(&q) {
            for i in 0..n {
                for j in 0..n {
                    h.data[i * n + j] += e * u[i] * u[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (h.get(i, j) + h.get(j, i));
                h.set(i, j, s);
                h.set(j, i, s);
            }
        }
        let b_train = (0..n).map(|_| rng.normal()).collect();
        let b_reg = (0..n).map(|_| rng.normal()).collect();
        Ok(QuadraticGame { h, b_train, b_reg, dim_theta, mu: lambda_min, alpha: lambda_min, beta: lambda_max })
    }

    /// Joint stationary point: `∇_θ L_train = 0` and `∇_ρ L_reg = 0`.
    pub fn fixed_point(&self) -> Result<Vec<f64>> {
        let mut c = self.b_reg.clone();
        c[..self.dim_theta].copy_from_slice(&self.b_train[..self.dim_theta]);
        solve_spd(&self.h, &c)
    }

    /// Largest rates allowed by the coupling conditions:
    /// `η_θ = 1/β`, `η_ρ = min(1/β, μη_θ/(4β²))`.
    pub fn max_rates(&self) -> (f64, f64) {
        let eta_theta = 1.0 / self.beta;
        (eta_theta, (1.0 / self.beta).min(self.mu * eta_theta / (4.0 * self.beta * self.beta)))
    }

    /// `1 − min(μη_θ/2, αη_ρ)`.
    pub fn theoretical_contraction(&self, eta_theta: f64, eta_rho: f64) -> f64 {
        1.0 - (self.mu * eta_theta / 2.0).min(self.alpha * eta_rho)
    }

    /// Alternating gradient steps from `z0`; returns `‖z_t − z*‖²` for `t = 0..=steps`.
    pub fn run(&self, z0: &[f64], eta_theta: f64, eta_rho: f64, steps: usize) -> Result<Vec<f64>> {
        let star = self.fixed_point()?;
        let mut z = z0.to_vec();
        let d = self.dim_theta;
        let err = |z: &[f64]| z.iter().zip(&star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let mut trace = vec![err(&z)];
        for _ in 0..steps {
            let hz = self.h.matvec(&z)?;
            for i in 0..d {
                z[i] -= eta_theta * (hz[i] - self.b_train[i]);
            }
            let hz = self.h.matvec(&z)?;
            for i in d..z.len() {
                z[i] -= eta_rho * (hz[i] - self.b_reg[i]);
            }
            trace.push(err(&z));
        }
        Ok(trace)
    }
}
