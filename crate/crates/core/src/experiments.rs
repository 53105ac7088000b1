//! End-to-end experiment drivers. Each takes a plain config with working
//! defaults and returns an [`Outcome`] holding the headline numbers and every
//! trace it produced.

use crate::datagen::{self, gen_blobs, gen_correlated, gen_shift_signals, gen_spline, split, SignalSpec, SplitDataset};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, ece, CalibrationReport, ECE_BINS};
use crate::models::checkpoint::Checkpoint;
use crate::models::linear::{mse, LinearReparam};
use crate::models::mlp::{mc_predict, NoisyMlp};
use crate::models::spline::{bspline_design, second_diff_matrix};
use crate::numkit::{child_seed, norm, sub, Rng};
use crate::optim::{train_growth, train_l2, train_noisy, train_projected, Direction, OptimizerKind, RunRecord, TrainConfig};
use crate::oracles::{lasso_grid, lasso_default_grid, ridge_default_grid, ridge_grid, spline_default_grid, spline_grid, GridResult};
use crate::regops::{AugmentParams, RegularizerSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

impl Summary {
    fn new(experiment: &str, seed: u64) -> Self {
        Summary { experiment: experiment.to_string(), seed, metrics: BTreeMap::new() }
    }

    fn set(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    pub fn get(&self, k: &str) -> f64 {
        self.metrics.get(k).copied().unwrap_or(f64::NAN)
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub records: Vec<(String, RunRecord)>,
    pub grids: Vec<(String, GridResult)>,
    pub calibration: Vec<(String, CalibrationReport)>,
    pub checkpoint: Option<Checkpoint>,
    /// Result of the experiment's own headline check, when it has one.
    pub passed: Option<bool>,
}

impl Outcome {
    fn new(summary: Summary) -> Self {
        Outcome { summary, records: Vec::new(), grids: Vec::new(), calibration: Vec::new(), checkpoint: None, passed: None }
    }
}

/// Correlated-feature ridge comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Config {
    pub n_base: usize,
    pub n_total: usize,
    pub noise_sd: f64,
    pub n_samples: usize,
    pub fractions: (f64, f64, f64),
    pub train: TrainConfig,
}

impl Default for L2Config {
    fn default() -> Self {
        L2Config {
            n_base: 5,
            n_total: 100,
            noise_sd: 0.1,
            n_samples: 400,
            fractions: (0.6, 0.2, 0.2),
            train: TrainConfig {
                lr_theta: 0.01,
                lr_rho: 0.01,
                reg_interval: 1,
                epochs: 6000,
                batch_size: usize::MAX,
                optimizer: OptimizerKind::Momentum { mu: 0.99 },
                rho_optimizer: OptimizerKind::Momentum { mu: 0.9 },
                reg_start_step: 3000,
                rho_init: 10.0,
                seed: 1,
                ..TrainConfig::default()
            },
        }
    }
}

/// Data for [`run_l2`].
pub fn l2_data(cfg: &L2Config) -> Result<SplitDataset> {
    let mut rng = Rng::new(child_seed(cfg.train.seed, 100));
    let ds = gen_correlated(cfg.n_base, cfg.n_total, cfg.noise_sd, cfg.n_samples, &mut rng)?;
    split(&ds, cfg.fractions, &mut rng)
}

/// Trains `w = ρθ` by cross-regularization and compares against the ridge grid.
pub fn run_l2(cfg: &L2Config) -> Result<Outcome> {
    let data = l2_data(cfg)?;
    let grid = ridge_grid(&data, &ridge_default_grid())?;
    let mut rng = Rng::new(child_seed(cfg.train.seed, 101));
    let dir: Vec<f64> = (0..cfg.n_total).map(|_| rng.normal()).collect();
    let mut model = LinearReparam::new(cfg.train.rho_init, &dir)?;
    let rec = train_l2(&mut model, &data, &cfg.train)?;
    let w = model.weights();
    let val = mse(&data.reg.x.matvec(&w)?, &data.reg.y);
    let mut s = Summary::new("l2", cfg.train.seed);
    s.set("xreg_val_mse", val);
    s.set("oracle_val_mse", grid.best_val_loss);
    s.set("relative_gap", val / grid.best_val_loss - 1.0);
    s.set("weight_rel_err", norm(&sub(&w, &grid.best_weights)) / norm(&grid.best_weights));
    s.set("oracle_lambda", grid.best_lambda);
    s.set("oracle_norm", norm(&grid.best_weights));
    s.set("rho", model.rho);
    let passed = s.get("relative_gap").abs() <= 0.01 && s.get("weight_rel_err") <= 0.05;
    let mut o = Outcome::new(s);
    o.checkpoint = Some(Checkpoint::from_linear(&model));
    o.records.push(("xreg".into(), rec));
    o.grids.push(("ridge".into(), grid));
    o.passed = Some(passed);
    Ok(o)
}

/// Diabetes LASSO comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Config {
    pub csv: String,
    pub target_column: String,
    pub fractions: (f64, f64, f64),
    /// Standard deviation of the random initial weights.
    pub init_scale: f64,
    pub train: TrainConfig,
}

impl Default for L1Config {
    fn default() -> Self {
        L1Config {
            csv: "diabetes.csv".into(),
            target_column: "target".into(),
            fractions: (0.8, 0.15, 0.05),
            init_scale: 0.1,
            train: TrainConfig {
                lr_theta: 5e-4,
                lr_rho: 0.01,
                reg_interval: 1,
                epochs: 2000,
                batch_size: 512,
                optimizer: OptimizerKind::Momentum { mu: 0.99 },
                rho_optimizer: OptimizerKind::Sgd,
                reg_start_step: 0,
                seed: 1,
                ..TrainConfig::default()
            },
        }
    }
}

/// Standardized features, centred on the training means, and a target
/// standardized with training statistics.
pub fn l1_data(cfg: &L1Config) -> Result<SplitDataset> {
    let ds = datagen::load_csv(&cfg.csv, &cfg.target_column, true)?;
    if ds.len() != 442 || ds.n_features() != 10 {
        return Err(Error::InvalidArgument(format!("expected 442x10 diabetes data, got {}x{}", ds.len(), ds.n_features())));
    }
    let mut rng = Rng::new(child_seed(cfg.train.seed, 200));
    let mut sp = split(&ds, cfg.fractions, &mut rng)?;
    let st = datagen::column_stats(&sp.train.x);
    let center = datagen::Standardization { means: st.means, stds: vec![1.0; ds.n_features()] };
    let ym = crate::numkit::mean(&sp.train.y);
    let ysd = (sp.train.y.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>() / sp.train.len() as f64).sqrt();
    for part in [&mut sp.train, &mut sp.reg, &mut sp.test] {
        datagen::apply_standardization(&mut part.x, &center);
        part.y.iter_mut().for_each(|v| *v = (*v - ym) / ysd);
    }
    Ok(sp)
}

/// Signs agree on every coefficient whose oracle magnitude exceeds `threshold`.
pub fn sign_agreement(oracle: &[f64], w: &[f64], threshold: f64) -> bool {
    let th = threshold;
    oracle.iter().zip(w).filter(|(o, _)| o.abs() > th).all(|(o, v)| o.signum() == v.signum() && *v != 0.0)
}

/// Share of the training-target range above which a coefficient's sign is compared.
pub const SIGN_THRESHOLD: f64 = 0.05;

/// Projected-gradient training with the L1 direction against the LASSO grid.
pub fn run_l1(cfg: &L1Config) -> Result<Outcome> {
    let data = l1_data(cfg)?;
    let grid = lasso_grid(&data, &lasso_default_grid())?;
    let mut rng = Rng::new(child_seed(cfg.train.seed, 201));
    let mut w: Vec<f64> = (0..data.train.n_features()).map(|_| cfg.init_scale * rng.normal()).collect();
    let rec = train_projected(&mut w, &data, &cfg.train, &Direction::L1)?;
    let val = mse(&data.reg.x.matvec(&w)?, &data.reg.y);
    let mut s = Summary::new("l1", cfg.train.seed);
    s.set("xreg_val_mse", val);
    s.set("oracle_val_mse", grid.best_val_loss);
    s.set("relative_gap", val / grid.best_val_loss - 1.0);
    s.set("oracle_lambda", grid.best_lambda);
    s.set("oracle_nonzero", grid.best_weights.iter().filter(|v| **v != 0.0).count() as f64);
    s.set("xreg_l1", w.iter().map(|v| v.abs()).sum());
    s.set("oracle_l1", grid.best_weights.iter().map(|v| v.abs()).sum());
    let (lo, hi) = data.train.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let threshold = SIGN_THRESHOLD * (hi - lo);
    s.set("sign_threshold", threshold);
    let signs = sign_agreement(&grid.best_weights, &w, threshold);
    s.set("sign_agreement", if signs { 1.0 } else { 0.0 });
    let passed = s.get("relative_gap").abs() <= 0.02 && signs;
    let mut o = Outcome::new(s);
    o.checkpoint = Some(Checkpoint {
        regularizer: RegularizerSpec::L1Projection,
        params: vec![crate::models::checkpoint::NamedArray::new("w", vec![w.len()], &w)],
    });
    o.records.push(("xreg".into(), rec));
    o.grids.push(("lasso".into(), grid));
    o.passed = Some(passed);
    Ok(o)
}

/// Penalized-spline comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineConfig {
    pub n_points: usize,
    pub n_knots: usize,
    pub fractions: (f64, f64, f64),
    pub train: TrainConfig,
}

impl Default for SplineConfig {
    fn default() -> Self {
        SplineConfig {
            n_points: 100,
            n_knots: 15,
            fractions: (0.4, 0.3, 0.3),
            train: TrainConfig {
                lr_theta: 0.3,
                lr_rho: 0.3,
                reg_interval: 1,
                epochs: 20000,
                batch_size: usize::MAX,
                optimizer: OptimizerKind::Sgd,
                rho_optimizer: OptimizerKind::Sgd,
                reg_start_step: 0,
                seed: 1,
                ..TrainConfig::default()
            },
        }
    }
}

/// Raw 1D split for [`run_spline`].
pub fn spline_data(cfg: &SplineConfig) -> Result<SplitDataset> {
    let mut rng = Rng::new(child_seed(cfg.train.seed, 300));
    let ds = gen_spline(cfg.n_points, &mut rng)?;
    split(&ds, cfg.fractions, &mut rng)
}

fn to_basis(sp: &SplitDataset, n_knots: usize) -> Result<SplitDataset> {
    let mut out = sp.clone();
    for part in [&mut out.train, &mut out.reg, &mut out.test] {
        part.x = bspline_design(&part.x.column(0), n_knots)?;
    }
    Ok(out)
}

/// Projected-gradient training with the roughness direction against the spline grid.
pub fn run_spline(cfg: &SplineConfig) -> Result<Outcome> {
    let raw = spline_data(cfg)?;
    let grid = spline_grid(&raw, cfg.n_knots, &spline_default_grid())?;
    let data = to_basis(&raw, cfg.n_knots)?;
    let d = second_diff_matrix(data.train.n_features())?;
    let mut beta = vec![0.0; data.train.n_features()];
    let dir = Direction::DerivNorm(d);
    let rec = train_projected(&mut beta, &data, &cfg.train, &dir)?;
    let val = mse(&data.reg.x.matvec(&beta)?, &data.reg.y);
    let mut s = Summary::new("spline", cfg.train.seed);
    s.set("xreg_val_mse", val);
    s.set("oracle_val_mse", grid.best_val_loss);
    s.set("relative_gap", val / grid.best_val_loss - 1.0);
    s.set("oracle_lambda", grid.best_lambda);
    s.set("xreg_roughness", dir.complexity(&beta));
    s.set("oracle_roughness", dir.complexity(&grid.best_weights));
    let passed = s.get("relative_gap").abs() <= 0.05;
    let mut o = Outcome::new(s);
    let mut m = crate::models::SplineModel::new(cfg.n_knots)?;
    m.beta = beta;
    o.checkpoint = Some(Checkpoint::from_spline(&m));
    o.records.push(("xreg".into(), rec));
    o.grids.push(("spline".into(), grid));
    o.passed = Some(passed);
    Ok(o)
}

/// How the noise scales of a network run are handled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// Learned on the regularization set.
    CrossReg,
    /// No noise at all.
    Plain,
    /// Every layer fixed at this σ.
    Fixed(f64),
}

/// Toy classification setup for the network experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub n_classes: usize,
    pub n_samples: usize,
    pub sep: f64,
    pub label_noise: f64,
    pub fractions: (f64, f64, f64),
    pub hidden: Vec<usize>,
    /// MC passes used when scoring the stochastic predictive on test data.
    pub eval_samples: usize,
    pub train: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            n_classes: 6,
            n_samples: 4000,
            sep: 3.0,
            label_noise: 0.2,
            fractions: (0.1, 0.05, 0.85),
            hidden: vec![64, 64, 64],
            eval_samples: 10,
            train: TrainConfig {
                lr_theta: 3e-3,
                lr_rho: 0.1,
                reg_interval: 30,
                mc_samples: 3,
                epochs: 500,
                batch_size: 64,
                optimizer: OptimizerKind::adam(),
                rho_optimizer: OptimizerKind::adam(),
                rho_init: -3.0,
                eval_every: 50,
                seed: 1,
                ..TrainConfig::default()
            },
        }
    }
}

/// Blob data for the network experiments.
pub fn blob_data(cfg: &MlpConfig) -> Result<SplitDataset> {
    let mut rng = Rng::new(child_seed(cfg.train.seed, 400));
    let ds = gen_blobs(cfg.n_classes, cfg.n_samples, cfg.sep, cfg.label_noise, &mut rng)?;
    split(&ds, cfg.fractions, &mut rng)
}

/// Fresh network for `cfg` with all noise scales at `log_sigma`.
pub fn init_mlp(cfg: &MlpConfig, input_dim: usize, log_sigma: f64) -> Result<NoisyMlp> {
    let mut dims = vec![input_dim];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(cfg.n_classes);
    NoisyMlp::new(&dims, log_sigma, &mut Rng::new(child_seed(cfg.train.seed, 401)))
}

fn mode_config(cfg: &MlpConfig, mode: NoiseMode) -> (TrainConfig, f64) {
    let mut t = cfg.train.clone();
    match mode {
        NoiseMode::CrossReg => (t, cfg.train.rho_init),
        NoiseMode::Plain => {
            t.noise = false;
            t.learn_rho = false;
            (t, f64::NEG_INFINITY)
        }
        NoiseMode::Fixed(s) => {
            t.learn_rho = false;
            (t, s.ln())
        }
    }
}

/// Trains one network on blob data and scores it.
///
/// Reports deterministic test accuracy, the calibration error of the
/// deterministic prediction, and the calibration error of the MC predictive
/// (`eval_samples` noisy passes; identical to the deterministic one without noise).
pub fn run_mlp(cfg: &MlpConfig, mode: NoiseMode) -> Result<Outcome> {
    let data = blob_data(cfg)?;
    run_mlp_on(cfg, mode, &data, "noise-mlp")
}

fn run_mlp_on(cfg: &MlpConfig, mode: NoiseMode, data: &SplitDataset, name: &str) -> Result<Outcome> {
    let (tcfg, ls) = mode_config(cfg, mode);
    let mut model = init_mlp(cfg, data.train.n_features(), ls)?;
    let rec = train_noisy(&mut model, data, &tcfg, None)?;
    let labels = data.test.labels();
    let p_det = model.predict_proba(&data.test.x)?;
    let p_mc = if tcfg.noise {
        mc_predict(&model, &data.test.x, cfg.eval_samples, &mut Rng::new(child_seed(cfg.train.seed, 402)))?
    } else {
        p_det.clone()
    };
    let cal_det = ece(&p_det, &labels, ECE_BINS)?;
    let cal_mc = ece(&p_mc, &labels, ECE_BINS)?;
    let mut s = Summary::new(name, cfg.train.seed);
    s.set("test_accuracy", accuracy(&p_det, &labels));
    s.set("mc_test_accuracy", accuracy(&p_mc, &labels));
    s.set("train_accuracy", accuracy(&model.predict_proba(&data.train.x)?, &data.train.labels()));
    s.set("ece_deterministic", cal_det.ece);
    s.set("ece_mc", cal_mc.ece);
    for (l, sg) in model.sigmas().iter().enumerate() {
        s.set(&format!("sigma_{l}"), *sg);
    }
    s.set("max_sigma", model.sigmas().iter().cloned().fold(0.0, f64::max));
    s.set("cross_access", rec.access.cross_access() as f64);
    s.set("overhead_ratio", rec.overhead_ratio());
    if rec.aborted.is_some() {
        s.set("aborted", 1.0);
    }
    let mut o = Outcome::new(s);
    o.checkpoint = Some(Checkpoint::from_mlp(&model, RegularizerSpec::NoiseScales));
    o.records.push(("train".into(), rec));
    o.calibration.push(("deterministic".into(), cal_det));
    o.calibration.push(("mc".into(), cal_mc));
    Ok(o)
}

/// σ of the fixed-regularization calibration baseline.
pub const CALIBRATION_BASELINE_SIGMA: f64 = 1.0;

/// Cross-regularized network versus the fixed-σ baseline on MC-predictive calibration.
pub fn run_calibrate(cfg: &MlpConfig) -> Result<Outcome> {
    let data = blob_data(cfg)?;
    let x = run_mlp_on(cfg, NoiseMode::CrossReg, &data, "calibrate")?;
    let f = run_mlp_on(cfg, NoiseMode::Fixed(CALIBRATION_BASELINE_SIGMA), &data, "calibrate")?;
    let mut s = Summary::new("calibrate", cfg.train.seed);
    s.set("xreg_ece", x.summary.get("ece_mc"));
    s.set("fixed_ece", f.summary.get("ece_mc"));
    s.set("xreg_ece_deterministic", x.summary.get("ece_deterministic"));
    s.set("fixed_ece_deterministic", f.summary.get("ece_deterministic"));
    s.set("xreg_accuracy", x.summary.get("test_accuracy"));
    s.set("fixed_accuracy", f.summary.get("test_accuracy"));
    let mut o = Outcome::new(s);
    o.passed = Some(o.summary.get("xreg_ece") <= o.summary.get("fixed_ece"));
    for (tag, src) in [("xreg", x), ("fixed", f)] {
        o.records.extend(src.records.into_iter().map(|(n, r)| (format!("{tag}_{n}"), r)));
        o.calibration.extend(src.calibration.into_iter().map(|(n, c)| (format!("{tag}_{n}"), c)));
    }
    Ok(o)
}

/// Training-set growth from a fraction of the data to all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub mlp: MlpConfig,
    pub small_fraction: f64,
    pub transition_epoch: usize,
    /// Epochs averaged on each side of the transition.
    pub window: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        let mut mlp = MlpConfig { fractions: (0.5, 0.05, 0.45), ..MlpConfig::default() };
        mlp.train.epochs = 360;
        mlp.train.eval_every = 10;
        GrowthConfig { mlp, small_fraction: 0.2, transition_epoch: 300, window: 20 }
    }
}

/// Noise-scale response to a fivefold increase of the training set.
pub fn run_growth(cfg: &GrowthConfig) -> Result<Outcome> {
    let full = blob_data(&cfg.mlp)?;
    let small = full.with_train_fraction(cfg.small_fraction);
    let mut model = init_mlp(&cfg.mlp, full.train.n_features(), cfg.mlp.train.rho_init)?;
    let rec = train_growth(&mut model, &small, &full, cfg.transition_epoch, &cfg.mlp.train)?;
    let sums: Vec<f64> = rec.rows.iter().map(|r| r.rho.iter().sum()).collect();
    let t = cfg.transition_epoch;
    let w = cfg.window;
    if t < w || t + w > sums.len() {
        return Err(Error::InvalidArgument("growth window does not fit around the transition".into()));
    }
    let pre = sums[t - w..t].iter().sum::<f64>() / w as f64;
    let post = sums[t..t + w].iter().sum::<f64>() / w as f64;
    let acc_at = |lo: usize, hi: usize| {
        let v: Vec<f64> = rec.rows[lo..hi].iter().map(|r| r.test_metric).filter(|v| v.is_finite()).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let mut s = Summary::new("growth", cfg.mlp.train.seed);
    s.set("sigma_sum_pre", pre);
    s.set("sigma_sum_post", post);
    s.set("test_accuracy_pre", acc_at(t - w, t));
    s.set("test_accuracy_post", acc_at(t, (t + w).min(rec.rows.len())));
    s.set("test_accuracy_final", rec.rows.last().map_or(f64::NAN, |r| r.test_metric));
    let mut o = Outcome::new(s);
    o.passed = Some(post < pre);
    o.checkpoint = Some(Checkpoint::from_mlp(&model, RegularizerSpec::NoiseScales));
    o.records.push(("growth".into(), rec));
    Ok(o)
}

/// Learned shift-augmentation magnitude on bump-position signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub signal: SignalSpec,
    pub n_samples: usize,
    pub fractions: (f64, f64, f64),
    pub hidden: Vec<usize>,
    pub alpha_init: f64,
    pub train: TrainConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            signal: SignalSpec::default(),
            n_samples: 2000,
            fractions: (0.05, 0.1, 0.85),
            hidden: vec![64, 64],
            alpha_init: 0.5,
            train: TrainConfig {
                lr_theta: 3e-3,
                lr_rho: 0.05,
                reg_interval: 10,
                mc_samples: 3,
                epochs: 300,
                batch_size: 32,
                noise: false,
                alpha_max: 16.0,
                eval_every: 50,
                seed: 1,
                ..TrainConfig::default()
            },
        }
    }
}

/// Signal data for [`run_augment`].
pub fn signal_data(cfg: &AugmentConfig) -> Result<SplitDataset> {
    let mut rng = Rng::new(child_seed(cfg.train.seed, 500));
    let ds = gen_shift_signals(&cfg.signal, cfg.n_samples, &mut rng)?;
    split(&ds, cfg.fractions, &mut rng)
}

/// Augmented run with learned `alpha` against the same network trained without augmentation.
pub fn run_augment(cfg: &AugmentConfig) -> Result<Outcome> {
    let data = signal_data(cfg)?;
    let mut dims = vec![cfg.signal.length];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(cfg.signal.n_classes);
    let init = || NoisyMlp::new(&dims, f64::NEG_INFINITY, &mut Rng::new(child_seed(cfg.train.seed, 501)));
    let mut aug_model = init()?;
    let mut p = AugmentParams { alpha: cfg.alpha_init };
    let rec = train_noisy(&mut aug_model, &data, &cfg.train, Some(&mut p))?;
    let mut base_model = init()?;
    let mut base_cfg = cfg.train.clone();
    base_cfg.learn_rho = false;
    let base_rec = train_noisy(&mut base_model, &data, &base_cfg, None)?;
    let labels = data.test.labels();
    let acc = accuracy(&aug_model.predict_proba(&data.test.x)?, &labels);
    let base = accuracy(&base_model.predict_proba(&data.test.x)?, &labels);
    let mut s = Summary::new("augment", cfg.train.seed);
    s.set("alpha", p.alpha);
    s.set("alpha_max", cfg.train.alpha_max);
    s.set("test_accuracy", acc);
    s.set("baseline_accuracy", base);
    s.set("cross_access", rec.access.cross_access() as f64);
    let mut o = Outcome::new(s);
    o.passed = Some(p.alpha > 0.0 && p.alpha < cfg.train.alpha_max && acc >= base);
    o.checkpoint = Some(Checkpoint::from_mlp(&aug_model, RegularizerSpec::AugmentMagnitude));
    o.records.push(("augment".into(), rec));
    o.records.push(("baseline".into(), base_rec));
    Ok(o)
}

/// Hyperparameter varied by [`run_sweep_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    McSamples,
    RegInterval,
    RegFraction,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc_samples" | "K" => Ok(SweepParam::McSamples),
            "reg_interval" | "r" => Ok(SweepParam::RegInterval),
            "reg_fraction" => Ok(SweepParam::RegFraction),
            _ => Err(Error::InvalidArgument(format!("unknown sweep parameter `{s}`"))),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::McSamples => "mc_samples",
            SweepParam::RegInterval => "reg_interval",
            SweepParam::RegFraction => "reg_fraction",
        }
    }
}

/// `cfg` with `param` set to `value`. A regularization fraction keeps the
/// training share and gives the rest to test.
pub fn sweep_config(cfg: &MlpConfig, param: SweepParam, value: f64) -> Result<MlpConfig> {
    let mut c = cfg.clone();
    match param {
        SweepParam::McSamples => c.train.mc_samples = value as usize,
        SweepParam::RegInterval => c.train.reg_interval = value as usize,
        SweepParam::RegFraction => {
            let tr = c.fractions.0;
            if !(value > 0.0 && tr + value < 1.0) {
                return Err(Error::InvalidArgument(format!("reg fraction {value} leaves no test data")));
            }
            c.fractions = (tr, value, 1.0 - tr - value);
        }
    }
    c.train.validate()?;
    Ok(c)
}

/// One cross-regularized network with `param = value`.
pub fn run_sweep_point(cfg: &MlpConfig, param: SweepParam, value: f64) -> Result<Outcome> {
    let c = sweep_config(cfg, param, value)?;
    let mut o = run_mlp(&c, NoiseMode::CrossReg)?;
    o.summary.experiment = "sweep".into();
    o.summary.set(param.name(), value);
    Ok(o)
}
