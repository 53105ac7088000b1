//! Closed-form and coordinate-descent reference solvers with λ-grid selection on
//! the regularization partition.

use crate::datagen::SplitDataset;
use crate::error::{Error, Result};
use crate::models::linear::mse;
use crate::models::spline::{bspline_design, second_diff_matrix};
use crate::numkit::{logspace, solve_spd, Matrix};
use serde::{Deserialize, Serialize};

/// Validation losses over a λ grid and the minimizing fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub lambdas: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub best_lambda: f64,
    pub best_index: usize,
    pub best_val_loss: f64,
    pub best_weights: Vec<f64>,
    /// Objective convention the λ values refer to.
    pub objective: String,
}

impl GridResult {
    fn from_losses(lambdas: Vec<f64>, val_losses: Vec<f64>, best_weights: Vec<f64>, best_index: usize, objective: &str) -> Self {
        GridResult {
            best_lambda: lambdas[best_index],
            best_val_loss: val_losses[best_index],
            lambdas,
            val_losses,
            best_index,
            best_weights,
            objective: objective.to_string(),
        }
    }

    /// `lambda,val_loss` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,val_loss\n");
        for (l, v) in self.lambdas.iter().zip(&self.val_losses) {
            s.push_str(&format!("{l:e},{v:e}\n"));
        }
        s
    }
}

/// 1000 log-spaced values on `[1e-3, 1e1]`.
pub fn ridge_default_grid() -> Vec<f64> {
    logspace(-3.0, 1.0, 1000)
}

/// 50 log-spaced values on `[10^-2.5, 1]`.
pub fn lasso_default_grid() -> Vec<f64> {
    logspace(-2.5, 0.0, 50)
}

/// 60 log-spaced values on `[1e-6, 1e2]`.
pub fn spline_default_grid() -> Vec<f64> {
    logspace(-6.0, 2.0, 60)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument("λ grid must be nonempty and positive".into()));
    }
    Ok(())
}

/// Minimizer of `‖Xw − y‖² + λ‖w‖²`, i.e. `(XᵀX + λI)⁻¹Xᵀy`.
pub fn ridge_solve(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    ridge_from_gram(&x.gram(), &x.t_matvec(y)?, lambda)
}

fn ridge_from_gram(g: &Matrix, xty: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mut a = g.clone();
    for i in 0..a.rows {
        a.data[i * a.cols + i] += lambda;
    }
    solve_spd(&a, xty)
}

/// Fits ridge on train at each λ and scores mean squared error on reg.
pub fn ridge_grid(split: &SplitDataset, grid: &[f64]) -> Result<GridResult> {
    check_grid(grid)?;
    let g = split.train.x.gram();
    let xty = split.train.x.t_matvec(&split.train.y)?;
    let mut losses = Vec::with_capacity(grid.len());
    for &l in grid {
        let w = ridge_from_gram(&g, &xty, l)?;
        losses.push(mse(&split.reg.x.matvec(&w)?, &split.reg.y));
    }
    let i = argmin(&losses);
    let w = ridge_from_gram(&g, &xty, grid[i])?;
    Ok(GridResult::from_losses(grid.to_vec(), losses, w, i, "sum of squares + lambda * ||w||_2^2"))
}

/// Output of [`lasso_cd`].
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub w: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `(1/(2n))‖Xw − y‖² + λ‖w‖₁`, stopping when the
/// largest coordinate change in a sweep is below `tol`.
pub fn lasso_cd(x: &Matrix, y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<LassoFit> {
    lasso_cd_warm(x, y, lambda, tol, max_iter, None)
}

fn lasso_cd_warm(x: &Matrix, y: &[f64], lambda: f64, tol: f64, max_iter: usize, init: Option<&[f64]>) -> Result<LassoFit> {
    if !(tol > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument("need tol > 0 and lambda >= 0".into()));
    }
    if x.rows != y.len() {
        return Err(Error::Dimension(format!("{} rows vs {} targets", x.rows, y.len())));
    }
    let n = x.rows as f64;
    let p = x.cols;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / n).collect();
    let mut w = init.map_or_else(|| vec![0.0; p], |v| v.to_vec());
    let mut r: Vec<f64> = y.to_vec();
    for (j, c) in cols.iter().enumerate() {
        if w[j] != 0.0 {
            r.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= w[j] * ci);
        }
    }
    for sweep in 1..=max_iter {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if sq[j] == 0.0 {
                continue;
            }
            let old = w[j];
            let z = crate::numkit::dot(&cols[j], &r) / n + sq[j] * old;
            let new = soft(z, lambda) / sq[j];
            if new != old {
                let d = new - old;
                r.iter_mut().zip(&cols[j]).for_each(|(ri, ci)| *ri -= d * ci);
                w[j] = new;
            }
            max_change = max_change.max((new - old).abs());
        }
        if max_change < tol {
            return Ok(LassoFit { w, converged: true, sweeps: sweep });
        }
    }
    Ok(LassoFit { w, converged: false, sweeps: max_iter })
}

/// Coordinate-descent tolerance used by [`lasso_grid`].
pub const LASSO_TOL: f64 = 1e-8;
/// Sweep cap used by [`lasso_grid`].
pub const LASSO_MAX_ITER: usize = 100_000;

/// LASSO on train at each λ, scored by mean squared error on reg.
pub fn lasso_grid(split: &SplitDataset, grid: &[f64]) -> Result<GridResult> {
    check_grid(grid)?;
    let mut losses = Vec::with_capacity(grid.len());
    let mut fits = Vec::with_capacity(grid.len());
    for &l in grid {
        let f = lasso_cd(&split.train.x, &split.train.y, l, LASSO_TOL, LASSO_MAX_ITER)?;
        losses.push(mse(&split.reg.x.matvec(&f.w)?, &split.reg.y));
        fits.push(f.w);
    }
    let i = argmin(&losses);
    let w = fits.swap_remove(i);
    Ok(GridResult::from_losses(grid.to_vec(), losses, w, i, "(1/(2n)) sum of squares + lambda * ||w||_1"))
}

/// `(BᵀB + λDᵀD)⁻¹Bᵀy` for basis matrix `b`.
pub fn spline_solve(b: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let p = second_diff_matrix(b.cols)?.gram();
    spline_solve_with(&b.gram(), &p, &b.t_matvec(y)?, lambda)
}

fn spline_solve_with(btb: &Matrix, p: &Matrix, bty: &[f64], lambda: f64) -> Result<Vec<f64>> {
    solve_spd(&btb.add_scaled(lambda, p)?, bty)
}

/// Penalized cubic spline on train (inputs in column 0) at each λ, scored on reg.
pub fn spline_grid(split: &SplitDataset, n_knots: usize, grid: &[f64]) -> Result<GridResult> {
    check_grid(grid)?;
    let bt = bspline_design(&split.train.x.column(0), n_knots)?;
    let br = bspline_design(&split.reg.x.column(0), n_knots)?;
    let p = second_diff_matrix(bt.cols)?.gram();
    let btb = bt.gram();
    let bty = bt.t_matvec(&split.train.y)?;
    let mut losses = Vec::with_capacity(grid.len());
    for &l in grid {
        let beta = spline_solve_with(&btb, &p, &bty, l)?;
        losses.push(mse(&br.matvec(&beta)?, &split.reg.y));
    }
    let i = argmin(&losses);
    let beta = spline_solve_with(&btb, &p, &bty, grid[i])?;
    Ok(GridResult::from_losses(grid.to_vec(), losses, beta, i, "sum of squares + lambda * ||D beta||^2"))
}
