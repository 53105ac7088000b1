use xreg_core::datagen::{gen_blobs, gen_correlated, split, SplitDataset};
use xreg_core::error::Error;
use xreg_core::metrics::GaussianProblem;
use xreg_core::models::linear::{mse_grad, LinearReparam};
use xreg_core::models::mlp::NoisyMlp;
use xreg_core::models::spline::second_diff_matrix;
use xreg_core::numkit::*;
use xreg_core::optim::*;
use xreg_core::regops::AugmentParams;

fn blobs(seed: u64) -> SplitDataset {
    let mut rng = Rng::new(seed);
    let ds = gen_blobs(3, 300, 2.5, 0.1, &mut rng).unwrap();
    split(&ds, (0.5, 0.2, 0.3), &mut rng).unwrap()
}

fn regression(seed: u64, d: usize) -> SplitDataset {
    let mut rng = Rng::new(seed);
    let ds = gen_correlated(d, d, 0.0, 200, &mut rng).unwrap();
    split(&ds, (0.5, 0.25, 0.25), &mut rng).unwrap()
}

fn noisy_cfg() -> TrainConfig {
    TrainConfig { lr_theta: 1e-2, lr_rho: 0.1, epochs: 6, batch_size: 10, seed: 3, ..TrainConfig::default() }
}

fn small_net(log_sigma: f64) -> NoisyMlp {
    NoisyMlp::new(&[2, 8, 8, 3], log_sigma, &mut Rng::new(4)).unwrap()
}

#[test]
fn sgd_step_example() {
    let mut s = OptState::new(OptimizerKind::Sgd, 1);
    let mut x = [0.0];
    step(&mut s, &mut x, &[1.0], 0.1).unwrap();
    assert_eq!(x, [-0.1]);
}

#[test]
fn zero_momentum_is_sgd() {
    let mut rng = Rng::new(1);
    let mut a = vec![1.0, -2.0, 0.5];
    let mut b = a.clone();
    let mut sa = OptState::new(OptimizerKind::Sgd, 3);
    let mut sb = OptState::new(OptimizerKind::Momentum { mu: 0.0 }, 3);
    for _ in 0..50 {
        let g: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        sa.step(&mut a, &g, 0.03).unwrap();
        sb.step(&mut b, &g, 0.03).unwrap();
    }
    assert_eq!(a, b);
}

#[test]
fn adam_constant_gradient_step_tends_to_lr() {
    let lr = 1e-3;
    let mut s = OptState::new(OptimizerKind::adam(), 2);
    let mut x = vec![0.0, 0.0];
    let g = [0.7, -3.0];
    for t in 0..1000 {
        let before = x.clone();
        s.step(&mut x, &g, lr).unwrap();
        let mag = (x[0] - before[0]).abs();
        // Bias correction makes m̂ = g and v̂ = g² exactly; the step is lr·|g|/(|g|+ε).
        let expect = lr * 0.7 / (0.7 + 1e-8);
        assert!((mag - expect).abs() < 1e-15, "step {t}");
    }
    assert!((x[1] - 1000.0 * lr * 3.0 / (3.0 + 1e-8)).abs() < 1e-12);
}

#[test]
fn non_finite_gradient_reports_step() {
    let mut s = OptState::new(OptimizerKind::Sgd, 1);
    let mut x = [0.0];
    s.step(&mut x, &[1.0], 0.1).unwrap();
    match s.step(&mut x, &[f64::NAN], 0.1) {
        Err(Error::NonFiniteGradient { step }) => assert_eq!(step, 1),
        other => panic!("{other:?}"),
    }
    assert!(s.step(&mut x, &[1.0, 2.0], 0.1).is_err());
}

#[test]
fn config_validation() {
    assert!(TrainConfig::default().validate().is_ok());
    assert!(TrainConfig { reg_interval: 0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { mc_samples: 0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { lr_rho: -1.0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
}

fn l2_cfg() -> TrainConfig {
    TrainConfig {
        lr_theta: 0.01,
        lr_rho: 0.01,
        reg_interval: 1,
        epochs: 300,
        batch_size: usize::MAX,
        optimizer: OptimizerKind::Sgd,
        rho_optimizer: OptimizerKind::Sgd,
        seed: 2,
        ..TrainConfig::default()
    }
}

#[test]
fn l2_frozen_rho_and_late_start() {
    let data = regression(1, 5);
    let mut m = LinearReparam::new(0.5, &[1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    let rec = train_l2(&mut m, &data, &TrainConfig { lr_rho: 0.0, ..l2_cfg() }).unwrap();
    assert!(rec.rows.iter().all(|r| r.rho == vec![0.5]));

    let mut m = LinearReparam::new(0.5, &[1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    let rec = train_l2(&mut m, &data, &TrainConfig { reg_start_step: 100, ..l2_cfg() }).unwrap();
    assert!(rec.rows[..100].iter().all(|r| r.rho == vec![0.5]));
    assert_ne!(rec.rows[150].rho, vec![0.5]);
    for r in &rec.rows {
        assert_eq!(r.rho.len(), 1);
    }
    assert!(rec.rows.windows(2).all(|w| w[1].epoch > w[0].epoch));
}

#[test]
fn l2_theta_stays_on_sphere() {
    let data = regression(2, 5);
    let mut m = LinearReparam::new(2.0, &[1.0, -1.0, 0.5, 0.0, 2.0]).unwrap();
    let cfg = TrainConfig { epochs: 1, ..l2_cfg() };
    for _ in 0..50 {
        train_l2(&mut m, &data, &cfg).unwrap();
        assert!((norm(&m.theta) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn l2_rho_update_uses_new_theta() {
    let data = regression(3, 4);
    let m0 = LinearReparam::new(1.5, &[0.3, -0.2, 0.9, 0.4]).unwrap();
    let mut m = m0.clone();
    let cfg = TrainConfig { epochs: 1, ..l2_cfg() };
    train_l2(&mut m, &data, &cfg).unwrap();

    let (_, g_theta, _) = m0.loss_grads(&data.train.x, &data.train.y).unwrap();
    let radial = dot(&g_theta, &m0.theta);
    let mut theta: Vec<f64> = m0
        .theta
        .iter()
        .zip(&g_theta)
        .map(|(t, g)| t - cfg.lr_theta * (g - radial * t) / (m0.rho * m0.rho))
        .collect();
    let n = norm(&theta);
    theta.iter_mut().for_each(|t| *t /= n);
    let mid = LinearReparam { rho: m0.rho, theta: theta.clone(), bias: None };
    let (_, _, g_rho) = mid.loss_grads(&data.reg.x, &data.reg.y).unwrap();
    assert!(theta.iter().zip(&m.theta).all(|(a, b)| (a - b).abs() < 1e-14));
    assert!((m.rho - (m0.rho - cfg.lr_rho * g_rho)).abs() < 1e-14);
}

#[test]
fn l2_reg_equals_train_recovers_ols_norm() {
    let mut data = regression(4, 5);
    data.reg = data.train.clone();
    let w_ols = solve_spd(&data.train.x.gram(), &data.train.x.t_matvec(&data.train.y).unwrap()).unwrap();
    let mut m = LinearReparam::new(0.5, &[1.0; 5]).unwrap();
    let cfg = TrainConfig {
        epochs: 4000,
        optimizer: OptimizerKind::Momentum { mu: 0.9 },
        rho_optimizer: OptimizerKind::Momentum { mu: 0.9 },
        ..l2_cfg()
    };
    train_l2(&mut m, &data, &cfg).unwrap();
    assert!((m.rho - norm(&w_ols)).abs() / norm(&w_ols) < 1e-3, "rho {} vs {}", m.rho, norm(&w_ols));
}

#[test]
fn l2_run_above_abort_threshold_stops() {
    let data = regression(5, 5);
    let mut m = LinearReparam::new(1.0, &[1.0; 5]).unwrap();
    let cfg = TrainConfig { abort_loss: 1e-9, epochs: 100, ..l2_cfg() };
    let rec = train_l2(&mut m, &data, &cfg).unwrap();
    assert!(rec.aborted.as_deref().unwrap().starts_with("run aborted at step 1"));
    assert_eq!(rec.rows.len(), 1);
}

#[test]
fn loops_never_cross_partitions() {
    let data = regression(6, 5);
    let mut m = LinearReparam::new(1.0, &[1.0; 5]).unwrap();
    let rec = train_l2(&mut m, &data, &TrainConfig { batch_size: 16, epochs: 5, ..l2_cfg() }).unwrap();
    assert_eq!(rec.access.cross_access(), 0);
    assert!(rec.access.reg[1] > 0 && rec.access.train[0] > 0);

    let mut w = vec![0.1; 5];
    let rec = train_projected(&mut w, &data, &TrainConfig { batch_size: 16, epochs: 5, ..l2_cfg() }, &Direction::L1).unwrap();
    assert_eq!(rec.access.cross_access(), 0);
    assert!(rec.access.reg[1] > 0);

    let blobs = blobs(1);
    let mut net = small_net(-3.0);
    let rec = train_noisy(&mut net, &blobs, &noisy_cfg(), None).unwrap();
    assert_eq!(rec.access.cross_access(), 0);
    assert!(rec.access.reg[1] > 0 && rec.access.train[0] > 0);
}

#[test]
fn projected_l1_without_rho_updates_keeps_norm_to_second_order() {
    let data = regression(7, 5);
    let l1 = |w: &[f64]| w.iter().map(|v| v.abs()).sum::<f64>();
    let w0 = vec![0.8, -0.5, 1.2, -0.9, 0.3];
    let drift = |eta: f64| {
        let mut w = w0.clone();
        let cfg = TrainConfig { lr_theta: eta, lr_rho: 0.0, epochs: 1, ..l2_cfg() };
        train_projected(&mut w, &data, &cfg, &Direction::L1).unwrap();
        (l1(&w) - l1(&w0)).abs()
    };
    let (a, b) = (drift(0.01), drift(0.005));
    assert!(a <= 0.01 * 0.01 && b <= a / 4.0 + 1e-15, "{a} {b}");
}

#[test]
fn projected_degenerate_direction_warns() {
    let data = regression(8, 5);
    let mut w = vec![0.0; 5];
    let d = second_diff_matrix(5).unwrap();
    let cfg = TrainConfig { lr_theta: 0.0, epochs: 3, ..l2_cfg() };
    let rec = train_projected(&mut w, &data, &cfg, &Direction::DerivNorm(d)).unwrap();
    assert_eq!(rec.skipped_reg_steps, rec.reg_steps);
    assert_eq!(rec.warnings.len(), 1);
}

#[test]
fn noisy_overhead_ratio_is_k_over_r() {
    let data = blobs(2);
    let mut net = small_net(-3.0);
    // 150 training rows in batches of 5 give 30 steps per epoch.
    let cfg = TrainConfig { batch_size: 5, epochs: 4, reg_interval: 30, mc_samples: 3, ..noisy_cfg() };
    let rec = train_noisy(&mut net, &data, &cfg, None).unwrap();
    assert_eq!(rec.train_forwards, 120);
    assert_eq!(rec.reg_steps, 4);
    assert!((rec.overhead_ratio() - 0.1).abs() < 1e-15);
}

#[test]
fn noisy_is_deterministic() {
    let data = blobs(3);
    let run = || {
        let mut net = small_net(-3.0);
        let mut p = AugmentParams { alpha: 0.3 };
        let rec = train_noisy(&mut net, &data, &noisy_cfg(), Some(&mut p)).unwrap();
        (rec.to_json(), net.theta(), net.log_sigma.clone(), p.alpha)
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_sigma_frozen_matches_plain() {
    let data = blobs(4);
    let mut a = small_net(f64::NEG_INFINITY);
    let ra = train_noisy(&mut a, &data, &TrainConfig { lr_rho: 0.0, ..noisy_cfg() }, None).unwrap();
    let mut b = small_net(f64::NEG_INFINITY);
    let rb = train_noisy(&mut b, &data, &TrainConfig { noise: false, learn_rho: false, ..noisy_cfg() }, None).unwrap();
    assert!(a.theta().iter().zip(b.theta()).all(|(x, y)| x.to_bits() == y.to_bits()));
    for (x, y) in ra.rows.iter().zip(&rb.rows) {
        assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
        assert_eq!(x.test_metric.to_bits(), y.test_metric.to_bits());
    }
}

#[test]
fn noisy_sigma_rises_from_tiny_init_and_respects_cap() {
    let data = blobs(5);
    let mut net = small_net(-3.0);
    let cfg = TrainConfig { lr_rho: 0.5, reg_interval: 1, epochs: 10, ..noisy_cfg() };
    train_noisy(&mut net, &data, &cfg, None).unwrap();
    assert!(net.log_sigma.iter().all(|l| *l <= 5.0));
    assert!(net.log_sigma.iter().any(|l| *l != -3.0));
}

#[test]
fn eval_every_leaves_nan_rows() {
    let data = blobs(6);
    let mut net = small_net(-3.0);
    let cfg = TrainConfig { epochs: 7, eval_every: 3, ..noisy_cfg() };
    let rec = train_noisy(&mut net, &data, &cfg, None).unwrap();
    let evaluated: Vec<usize> = rec.rows.iter().filter(|r| r.test_metric.is_finite()).map(|r| r.epoch).collect();
    assert_eq!(evaluated, vec![2, 5, 6]);
    assert!(rec.to_csv().starts_with("epoch,train_loss,reg_loss,test_metric,gen_gap,rho_0,rho_1\n"));
    assert!(rec.to_json().contains("null"));
}

#[test]
fn growth_with_zero_transition_is_a_full_run() {
    let full = blobs(7);
    let small = full.with_train_fraction(0.2);
    let mut a = small_net(-3.0);
    let ra = train_growth(&mut a, &small, &full, 0, &noisy_cfg()).unwrap();
    let mut b = small_net(-3.0);
    let rb = train_noisy(&mut b, &full, &noisy_cfg(), None).unwrap();
    assert_eq!(ra.to_json(), rb.to_json());
    assert_eq!(a.theta(), b.theta());
}

#[test]
fn growth_requires_subset() {
    let full = blobs(8);
    let other = blobs(9);
    let mut net = small_net(-3.0);
    let mut bad = full.with_train_fraction(0.2);
    bad.indices[0] = other.indices[0].iter().map(|i| i + 10_000).take(bad.train.len()).collect();
    assert!(train_growth(&mut net, &bad, &full, 2, &noisy_cfg()).is_err());
}

#[test]
fn univariate_gaussian_closed_form() {
    let g = GaussianProblem::default().fit((&[1.0], &[1.0]), (&[1.0], &[3.0]));
    assert!((g.w - 1.0).abs() < 1e-6);
    assert!((g.sigma - 2.0).abs() < 1e-6);
}

#[test]
fn convergence_measurement_examples() {
    let halving: Vec<f64> = (0..40).map(|i| 0.5f64.powi(i)).collect();
    assert!((measure_convergence(&halving, TAIL_FRACTION).unwrap() - 0.5).abs() < 1e-6);
    assert!((measure_convergence(&[3.0; 25], TAIL_FRACTION).unwrap() - 1.0).abs() < 1e-12);
    assert!(measure_convergence(&[1.0; 10], TAIL_FRACTION).is_err());
    let mut bad = vec![1.0; 25];
    bad[3] = 0.0;
    assert!(matches!(measure_convergence(&bad, TAIL_FRACTION), Err(Error::InvalidArgument(_))));
}

#[test]
fn quadratic_game_contracts_within_bound() {
    let game = QuadraticGame::random(6, 3, 1.0, 4.0, &mut Rng::new(11)).unwrap();
    let (et, er) = game.max_rates();
    assert!(er <= game.mu * et / (4.0 * game.beta * game.beta) + 1e-18);
    let trace = game.run(&[3.0; 9], et, er, 300).unwrap();
    let rate = measure_convergence(&trace, TAIL_FRACTION).unwrap();
    assert!(rate <= game.theoretical_contraction(et, er) + 0.05);
    assert!(trace[10..].windows(2).all(|w| w[1] <= w[0]));
    let star = game.fixed_point().unwrap();
    let hz = game.h.matvec(&star).unwrap();
    assert!((0..6).all(|i| (hz[i] - game.b_train[i]).abs() < 1e-10));
    assert!((6..9).all(|i| (hz[i] - game.b_reg[i]).abs() < 1e-10));
}

#[test]
fn mse_grad_shapes() {
    assert!(mse_grad(&Matrix::zeros(3, 2), &[0.0; 3], &[0.0; 3], 0.0).is_err());
}
