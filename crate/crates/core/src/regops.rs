//! Regularization mechanisms: splitting a gradient along a complexity
//! direction, the L1 and roughness directions, and a differentiable circular
//! shift used as a learnable augmentation.

use crate::error::{Error, Result};
use crate::numkit::{dot, norm, Matrix, Rng};
use serde::{Deserialize, Serialize};

/// Which mechanism carries the regularization parameters of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularizerSpec {
    /// Weight magnitude of `w = ρθ`.
    L2Reparam,
    /// Gradient component along `sign(w)`.
    L1Projection,
    /// Gradient component along `DᵀDβ`.
    DerivNormProjection,
    /// Per-layer additive noise scales.
    NoiseScales,
    /// Maximum shift of the circular-shift augmentation.
    AugmentMagnitude,
}

/// Complexity and feature components of a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSplit {
    pub g_rho: Vec<f64>,
    pub g_perp: Vec<f64>,
    /// Signed length `gᵀũ` of the complexity component.
    pub coef: f64,
}

/// Splits `g` into its component along `u_raw` and the orthogonal remainder.
pub fn project(g: &[f64], u_raw: &[f64]) -> Result<GradSplit> {
    if g.len() != u_raw.len() {
        return Err(Error::Dimension(format!("gradient {} vs direction {}", g.len(), u_raw.len())));
    }
    let n = norm(u_raw);
    if !(n > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let u: Vec<f64> = u_raw.iter().map(|v| v / n).collect();
    let coef = dot(g, &u);
    let g_rho: Vec<f64> = u.iter().map(|v| coef * v).collect();
    let g_perp = g.iter().zip(&g_rho).map(|(a, b)| a - b).collect();
    Ok(GradSplit { g_rho, g_perp, coef })
}

/// `sign(w) / ‖sign(w)‖` with `sign(0) = 0`.
pub fn l1_direction(w: &[f64]) -> Result<Vec<f64>> {
    let s: Vec<f64> = w.iter().map(|&v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 }).collect();
    let n = norm(&s);
    if n == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok(s.into_iter().map(|v| v / n).collect())
}

/// `DᵀDβ / ‖DᵀDβ‖`.
pub fn deriv_norm_direction(beta: &[f64], d: &Matrix) -> Result<Vec<f64>> {
    let db = d.matvec(beta)?;
    let u = d.t_matvec(&db)?;
    let n = norm(&u);
    // Treat round-off sized results as the null space.
    let scale = norm(beta) * d.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(2);
    if !(n > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateDirection);
    }
    Ok(u.into_iter().map(|v| v / n).collect())
}

/// Circular shift by `s` positions with linear interpolation:
/// `out[i] = (1−a)·x[i−⌊s⌋] + a·x[i−⌊s⌋−1]`, `a = s − ⌊s⌋`, indices mod `len`.
pub fn shift1d(x: &[f64], s: f64) -> Vec<f64> {
    shift1d_with_grad(x, s).0
}

/// [`shift1d`] together with `∂out/∂s` (right derivative at integer `s`).
pub fn shift1d_with_grad(x: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
    let l = x.len() as i64;
    let f = s.floor();
    let a = s - f;
    let fi = f as i64;
    let mut out = Vec::with_capacity(x.len());
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..l {
        let x0 = x[(i - fi).rem_euclid(l) as usize];
        let x1 = x[(i - fi - 1).rem_euclid(l) as usize];
        out.push((1.0 - a) * x0 + a * x1);
        grad.push(x1 - x0);
    }
    (out, grad)
}

/// Learnable augmentation magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    /// Maximum shift, in index units.
    pub alpha: f64,
}

/// One augmented sample with its reparameterized derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub x: Vec<f64>,
    /// The draw `u ∼ U[−1, 1]`.
    pub u: f64,
    /// `∂x/∂alpha = u · ∂shift/∂s`.
    pub d_alpha: Vec<f64>,
}

/// Shifts `x` by `alpha · u` for a fresh `u ∼ U[−1, 1]`.
pub fn augment_sample(x: &[f64], p: &AugmentParams, rng: &mut Rng) -> Result<Augmented> {
    augment_with_draw(x, p, rng.uniform_in(-1.0, 1.0))
}

/// [`augment_sample`] with the draw supplied.
pub fn augment_with_draw(x: &[f64], p: &AugmentParams, u: f64) -> Result<Augmented> {
    if !(p.alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", p.alpha)));
    }
    let (xs, g) = shift1d_with_grad(x, p.alpha * u);
    Ok(Augmented { x: xs, u, d_alpha: g.into_iter().map(|v| u * v).collect() })
}

/// Augments every row of `x`. Returns the shifted batch and `∂batch/∂alpha`.
pub fn augment_batch(x: &Matrix, p: &AugmentParams, rng: &mut Rng) -> Result<(Matrix, Matrix)> {
    let mut out = Matrix::zeros(x.rows, x.cols);
    let mut d = Matrix::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let a = augment_sample(x.row(r), p, rng)?;
        out.row_mut(r).copy_from_slice(&a.x);
        d.row_mut(r).copy_from_slice(&a.d_alpha);
    }
    Ok((out, d))
}
