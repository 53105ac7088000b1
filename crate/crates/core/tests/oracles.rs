use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
use std::path::PathBuf;
use xreg_core::datagen::{gen_spline, split, SplitDataset};
use xreg_core::experiments::{l1_data, l2_data, L1Config, L2Config};
use xreg_core::models::spline::{bspline_design, second_diff_matrix};
use xreg_core::numkit::*;
use xreg_core::oracles::*;

fn random_problem(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let x = Matrix::from_vec(n, p, (0..n * p).map(|_| rng.normal()).collect()).unwrap();
    let y = (0..n).map(|_| rng.normal()).collect();
    (x, y)
}

fn diabetes_split() -> SplitDataset {
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/diabetes.csv");
    l1_data(&L1Config { csv: csv.to_string_lossy().into_owned(), ..L1Config::default() }).unwrap()
}

fn spline_split(seed: u64) -> SplitDataset {
    let mut rng = Rng::new(seed);
    let ds = gen_spline(100, &mut rng).unwrap();
    split(&ds, (0.4, 0.3, 0.3), &mut rng).unwrap()
}

#[test]
fn ridge_scalar_example() {
    let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
    assert!((ridge_solve(&x, &[2.0], 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn ridge_shrinks_to_zero() {
    let (x, y) = random_problem(1, 30, 4);
    let w = ridge_solve(&x, &y, 1e9).unwrap();
    assert!(norm(&w) < 1e-6 * norm(&x.t_matvec(&y).unwrap()));
}

#[test]
fn ridge_is_stationary() {
    let (x, y) = random_problem(2, 50, 6);
    let lambda = 0.7;
    let w = ridge_solve(&x, &y, lambda).unwrap();
    let r: Vec<f64> = x.matvec(&w).unwrap().iter().zip(&y).map(|(a, b)| a - b).collect();
    let g = x.t_matvec(&r).unwrap();
    let grad: Vec<f64> = g.iter().zip(&w).map(|(gi, wi)| 2.0 * gi + 2.0 * lambda * wi).collect();
    assert!(norm(&grad) < 1e-8, "{}", norm(&grad));
}

#[test]
fn ridge_orthonormal_columns() {
    // Modified Gram-Schmidt on random columns.
    let (raw, y) = random_problem(3, 20, 4);
    let mut q: Vec<Vec<f64>> = Vec::new();
    for j in 0..4 {
        let mut c = raw.column(j);
        for qk in &q {
            let d = dot(&c, qk);
            c.iter_mut().zip(qk).for_each(|(a, b)| *a -= d * b);
        }
        let n = norm(&c);
        q.push(c.iter().map(|v| v / n).collect());
    }
    let x = Matrix::from_vec(20, 4, (0..20).flat_map(|i| q.iter().map(move |c| c[i])).collect()).unwrap();
    for lambda in [0.0, 0.5, 3.0] {
        let w = ridge_solve(&x, &y, lambda).unwrap();
        for j in 0..4 {
            assert!((w[j] - dot(&q[j], &y) / (1.0 + lambda)).abs() < 1e-12);
        }
    }
}

#[test]
fn ridge_rejects_singular_and_negative() {
    let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
    assert!(ridge_solve(&x, &[1.0, 2.0, 3.0], 0.0).is_err());
    assert!(ridge_solve(&x, &[1.0, 2.0, 3.0], -1.0).is_err());
    assert!(ridge_solve(&x, &[1.0, 2.0, 3.0], 1e-3).is_ok());
}

#[test]
fn ridge_grid_default_and_shape() {
    let g = ridge_default_grid();
    assert_eq!(g.len(), 1000);
    assert!((g[0] - 1e-3).abs() < 1e-15 && (g[999] - 10.0).abs() < 1e-12);
    let data = l2_data(&L2Config::default()).unwrap();
    let r = ridge_grid(&data, &g).unwrap();
    assert_eq!(r.val_losses.len(), r.lambdas.len());
    assert!(r.best_index > 0 && r.best_index < 999, "minimum at edge: {}", r.best_index);
    assert!(r.val_losses.iter().all(|v| *v >= r.best_val_loss));
    assert_eq!(r.best_lambda, r.lambdas[r.best_index]);
    assert_eq!(r.best_weights, ridge_solve(&data.train.x, &data.train.y, r.best_lambda).unwrap());
}

#[test]
fn ridge_grid_duplicates_and_order() {
    let data = l2_data(&L2Config { n_samples: 120, ..L2Config::default() }).unwrap();
    let grid = vec![0.1, 0.1, 1.0, 3.0];
    let r = ridge_grid(&data, &grid).unwrap();
    assert_eq!(r.val_losses[0], r.val_losses[1]);
    let rev: Vec<f64> = grid.iter().rev().copied().collect();
    let rr = ridge_grid(&data, &rev).unwrap();
    assert_eq!(r.best_lambda, rr.best_lambda);
    let mut a = r.val_losses.clone();
    a.reverse();
    assert_eq!(a, rr.val_losses);
    assert!(ridge_grid(&data, &[]).is_err());
    assert!(ridge_grid(&data, &[1.0, 0.0]).is_err());
}

#[test]
fn lasso_full_shrinkage_threshold() {
    let (x, y) = random_problem(4, 40, 5);
    let xty = x.t_matvec(&y).unwrap();
    let lmax = xty.iter().map(|v| v.abs()).fold(0.0, f64::max) / 40.0;
    let f = lasso_cd(&x, &y, lmax, 1e-10, 1000).unwrap();
    assert!(f.converged && f.w.iter().all(|w| *w == 0.0));
    let f = lasso_cd(&x, &y, 0.9 * lmax, 1e-10, 1000).unwrap();
    assert!(f.w.iter().any(|w| *w != 0.0));
}

#[test]
fn lasso_scalar_soft_threshold() {
    let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
    let f = lasso_cd(&x, &[2.0], 1.0, 1e-12, 10).unwrap();
    assert_eq!(f.w, vec![1.0]);
}

fn kkt_ok(x: &Matrix, y: &[f64], w: &[f64], lambda: f64, tol: f64) {
    let n = x.rows as f64;
    let r: Vec<f64> = y.iter().zip(x.matvec(w).unwrap()).map(|(a, b)| a - b).collect();
    let c = x.t_matvec(&r).unwrap();
    for j in 0..w.len() {
        let cj = c[j] / n;
        if w[j] != 0.0 {
            assert!((cj - lambda * w[j].signum()).abs() < 10.0 * tol, "active {j}: {cj}");
        } else {
            assert!(cj.abs() <= lambda + 10.0 * tol, "inactive {j}: {cj}");
        }
    }
}

#[test]
fn lasso_kkt_conditions() {
    let (x, y) = random_problem(5, 60, 8);
    for lambda in [0.01, 0.05, 0.2] {
        let f = lasso_cd(&x, &y, lambda, LASSO_TOL, LASSO_MAX_ITER).unwrap();
        assert!(f.converged);
        kkt_ok(&x, &y, &f.w, lambda, LASSO_TOL);
    }
    let d = diabetes_split();
    for lambda in lasso_default_grid().into_iter().step_by(7) {
        let f = lasso_cd(&d.train.x, &d.train.y, lambda, LASSO_TOL, LASSO_MAX_ITER).unwrap();
        assert!(f.converged);
        kkt_ok(&d.train.x, &d.train.y, &f.w, lambda, LASSO_TOL);
    }
}

#[test]
fn lasso_at_zero_matches_least_squares() {
    let (x, y) = random_problem(6, 80, 5);
    let f = lasso_cd(&x, &y, 0.0, 1e-12, LASSO_MAX_ITER).unwrap();
    let w = ridge_solve(&x, &y, 0.0).unwrap();
    assert!(f.w.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn lasso_reports_non_convergence() {
    let (x, y) = random_problem(7, 30, 6);
    let f = lasso_cd(&x, &y, 1e-4, 1e-14, 2).unwrap();
    assert!(!f.converged);
    assert_eq!(f.sweeps, 2);
    assert!(lasso_cd(&x, &y, 0.1, 0.0, 10).is_err());
    assert!(lasso_cd(&x, &y[..5], 0.1, 1e-8, 10).is_err());
}

#[test]
fn lasso_grid_on_diabetes() {
    let g = lasso_default_grid();
    assert_eq!(g.len(), 50);
    assert!((g[0] - 10f64.powf(-2.5)).abs() < 1e-15 && (g[49] - 1.0).abs() < 1e-15);
    let d = diabetes_split();
    let r = lasso_grid(&d, &g).unwrap();
    let nz = r.best_weights.iter().filter(|w| **w != 0.0).count();
    assert!((3..=10).contains(&nz), "{nz} nonzero coefficients");
    assert!(r.objective.contains("1/(2n)"));

    let l1: Vec<f64> = g
        .iter()
        .map(|&l| lasso_cd(&d.train.x, &d.train.y, l, LASSO_TOL, LASSO_MAX_ITER).unwrap().w.iter().map(|v| v.abs()).sum())
        .collect();
    assert!(l1.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{l1:?}");
}

#[test]
fn spline_large_lambda_is_null_space_fit() {
    let d = spline_split(1);
    let x = d.train.x.column(0);
    let b = bspline_design(&x, 15).unwrap();
    let beta = spline_solve(&b, &d.train.y, 1e9).unwrap();
    // Least squares over coefficient sequences that are affine in the index.
    let p = b.cols;
    let mut z = Matrix::zeros(b.rows, 2);
    for r in 0..b.rows {
        let row = b.row(r);
        z.set(r, 0, row.iter().sum());
        z.set(r, 1, row.iter().enumerate().map(|(i, v)| i as f64 * v).sum());
    }
    let c = solve_spd(&z.gram(), &z.t_matvec(&d.train.y).unwrap()).unwrap();
    let line: Vec<f64> = (0..p).map(|i| c[0] + c[1] * i as f64).collect();
    let a = b.matvec(&beta).unwrap();
    let e = b.matvec(&line).unwrap();
    assert!(a.iter().zip(&e).all(|(u, v)| (u - v).abs() < 1e-5));
    let dd = second_diff_matrix(p).unwrap();
    assert!(norm(&dd.matvec(&beta).unwrap()) < 1e-5);
}

#[test]
fn spline_unpenalized_has_lowest_train_error() {
    let d = spline_split(2);
    let b = bspline_design(&d.train.x.column(0), 15).unwrap();
    let train_mse = |l: f64| {
        let beta = spline_solve(&b, &d.train.y, l).unwrap();
        let f = b.matvec(&beta).unwrap();
        f.iter().zip(&d.train.y).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / f.len() as f64
    };
    let base = train_mse(0.0);
    for l in spline_default_grid() {
        assert!(base <= train_mse(l) + 1e-12);
    }
}

#[test]
fn spline_solution_is_stationary() {
    let d = spline_split(3);
    let b = bspline_design(&d.train.x.column(0), 15).unwrap();
    let lambda = 0.01;
    let beta = spline_solve(&b, &d.train.y, lambda).unwrap();
    let pen = second_diff_matrix(b.cols).unwrap().gram();
    let g1 = b.gram().matvec(&beta).unwrap();
    let g2 = pen.matvec(&beta).unwrap();
    let g3 = b.t_matvec(&d.train.y).unwrap();
    let grad: Vec<f64> = (0..beta.len()).map(|i| g1[i] + lambda * g2[i] - g3[i]).collect();
    assert!(norm(&grad) < 1e-8, "{}", norm(&grad));
}

#[test]
fn spline_grid_default() {
    let g = spline_default_grid();
    assert_eq!(g.len(), 60);
    let d = spline_split(4);
    let r = spline_grid(&d, 15, &g).unwrap();
    assert_eq!(r.best_weights.len(), 17);
    assert!(r.val_losses.iter().all(|v| *v >= r.best_val_loss));
    assert!(r.to_csv().starts_with("lambda,val_loss\n"));
    assert_eq!(r.to_csv().lines().count(), 61);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_result_invariants(seed in 0u64..1000, k in 1usize..20) {
        let data = l2_data(&L2Config { n_samples: 100, n_total: 10, n_base: 2, ..L2Config::default() }).unwrap();
        let mut rng = Rng::new(seed);
        let grid: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.uniform() * 4.0 - 3.0)).collect();
        let r = ridge_grid(&data, &grid).unwrap();
        prop_assert_eq!(r.val_losses.len(), grid.len());
        prop_assert!(r.val_losses.iter().all(|v| *v >= r.best_val_loss));
        prop_assert_eq!(r.best_val_loss, r.val_losses[r.best_index]);
    }
}
