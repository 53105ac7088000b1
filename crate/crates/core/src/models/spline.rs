//! Cubic B-spline regression on an open-uniform knot vector with a
//! second-difference roughness penalty.

use crate::error::{Error, Result};
use crate::numkit::{dot, Matrix};
use serde::{Deserialize, Serialize};

/// Spline degree used throughout.
pub const DEGREE: usize = 3;

/// Full knot vector: `n_knots` uniform breakpoints on `[0,1]`, ends repeated `DEGREE` extra times.
pub fn open_uniform_knots(n_knots: usize) -> Vec<f64> {
    let mut t = vec![0.0; DEGREE];
    t.extend((0..n_knots).map(|i| i as f64 / (n_knots - 1) as f64));
    t.extend(std::iter::repeat_n(1.0, DEGREE));
    t
}

/// Number of basis functions for `n_knots` breakpoints.
pub fn basis_count(n_knots: usize) -> usize {
    n_knots + DEGREE - 1
}

/// Cubic basis evaluated at each `x`; row `i` holds all basis values at `x[i]`.
pub fn bspline_design(x: &[f64], n_knots: usize) -> Result<Matrix> {
    if n_knots < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 knots, got {n_knots}")));
    }
    let t = open_uniform_knots(n_knots);
    let nb = basis_count(n_knots);
    let mut b = Matrix::zeros(x.len(), nb);
    for (r, &xv) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&xv) {
            return Err(Error::InvalidArgument(format!("x = {xv} outside [0, 1]")));
        }
        let span = find_span(&t, nb, xv);
        let vals = basis_funs(&t, span, xv);
        for (k, v) in vals.iter().enumerate() {
            b.set(r, span - DEGREE + k, *v);
        }
    }
    Ok(b)
}

// Index `i` with t[i] <= x < t[i+1]; the right end maps to the last nonempty span.
fn find_span(t: &[f64], nb: usize, x: f64) -> usize {
    if x >= t[nb] {
        return nb - 1;
    }
    let (mut lo, mut hi) = (DEGREE, nb);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x < t[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

// The DEGREE+1 nonzero basis values on `span` (Cox–de Boor triangle).
fn basis_funs(t: &[f64], span: usize, x: f64) -> [f64; DEGREE + 1] {
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let tmp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    n
}

/// `(n_basis − 2) × n_basis` second-difference operator scaled so that
/// `trace(DᵀD) = n_basis`.
pub fn second_diff_matrix(n_basis: usize) -> Result<Matrix> {
    if n_basis < 3 {
        return Err(Error::InvalidArgument(format!("need n_basis >= 3, got {n_basis}")));
    }
    // Each row contributes 1 + 4 + 1 to trace(DᵀD).
    let s = (n_basis as f64 / (6.0 * (n_basis - 2) as f64)).sqrt();
    let mut d = Matrix::zeros(n_basis - 2, n_basis);
    for i in 0..n_basis - 2 {
        d.set(i, i, s);
        d.set(i, i + 1, -2.0 * s);
        d.set(i, i + 2, s);
    }
    Ok(d)
}

/// Spline coefficients together with the knot vector and penalty operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    pub beta: Vec<f64>,
    pub n_knots: usize,
    pub knots: Vec<f64>,
    pub degree: usize,
    pub d: Matrix,
}

impl SplineModel {
    /// Zero coefficients on `n_knots` breakpoints.
    pub fn new(n_knots: usize) -> Result<Self> {
        let nb = basis_count(n_knots);
        Ok(SplineModel {
            beta: vec![0.0; nb],
            n_knots,
            knots: open_uniform_knots(n_knots),
            degree: DEGREE,
            d: second_diff_matrix(nb)?,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.beta.len()
    }

    pub fn design(&self, x: &[f64]) -> Result<Matrix> {
        bspline_design(x, self.n_knots)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.design(x)?.matvec(&self.beta)
    }

    /// `DᵀD`.
    pub fn penalty(&self) -> Matrix {
        self.d.gram()
    }

    /// `‖D β‖²`.
    pub fn roughness(&self) -> f64 {
        let db = self.d.matvec(&self.beta).expect("D matches beta");
        dot(&db, &db)
    }
}
