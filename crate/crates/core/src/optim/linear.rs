//! Cross-regularization loops for models that are linear in their parameters.

use super::access::{Partition, Phase, PhaseClock};
use super::{OptState, RunRecord, TrainConfig};
use crate::datagen::SplitDataset;
use crate::error::{Error, Result};
use crate::metrics::{gen_gap, MetricKind};
use crate::models::linear::{linear_forward, mse, mse_grad, LinearReparam, RHO_MIN};
use crate::numkit::{dot, Matrix, Rng, child_seed};
use crate::optim::record::EpochRow;
use crate::regops::{deriv_norm_direction, l1_direction, project};
use std::time::Instant;

/// Row batches for one epoch: everything in order when one batch covers the
/// partition, otherwise a fresh shuffle cut into `batch_size` chunks.
fn epoch_batches(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    if batch_size >= n {
        return vec![(0..n).collect()];
    }
    rng.permutation(n).chunks(batch_size).map(|c| c.to_vec()).collect()
}

fn is_reg_step(cfg: &TrainConfig, step: usize) -> bool {
    cfg.learn_rho && step > cfg.reg_start_step && step % cfg.reg_interval == 0
}

/// Alternating training of `w = ρθ`.
///
/// Each step moves `θ` along the tangent-projected training gradient and
/// renormalizes; the step is taken in weight units, so the Euclidean
/// `θ`-gradient (which carries a factor `ρ`) is divided by `ρ²`. After more
/// than `reg_start_step` steps, every `reg_interval` steps `ρ` takes a step
/// on the regularization-set MSE at the freshly updated `θ`.
pub fn train_l2(model: &mut LinearReparam, data: &SplitDataset, cfg: &TrainConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let clock = PhaseClock::new();
    let train = Partition::new(&data.train, &clock);
    let reg = Partition::new(&data.reg, &clock);
    let test = Partition::new(&data.test, &clock);
    let mut rng = Rng::new(child_seed(cfg.seed, 1));
    let mut rec = RunRecord::new(cfg);
    let mut theta_opt = OptState::new(cfg.optimizer, model.dim());
    let mut rho_opt = OptState::new(cfg.rho_optimizer, 1);
    let mut step = 0;
    'outer: for epoch in 0..cfg.epochs {
        for batch in epoch_batches(train.len(), cfg.batch_size, &mut rng) {
            clock.set(Phase::Theta);
            let (_, g_theta, _) = if batch.len() == train.len() {
                let d = train.all();
                model.loss_grads(&d.x, &d.y)?
            } else {
                let (x, y) = train.rows(&batch);
                model.loss_grads(&x, &y)?
            };
            let radial = dot(&g_theta, &model.theta);
            let inv = 1.0 / (model.rho * model.rho);
            let tangent: Vec<f64> = g_theta.iter().zip(&model.theta).map(|(g, t)| (g - radial * t) * inv).collect();
            theta_opt.step(&mut model.theta, &tangent, cfg.lr_theta).map_err(|_| Error::NonFiniteGradient { step })?;
            model.renormalize();
            step += 1;
            if is_reg_step(cfg, step) {
                clock.set(Phase::Rho);
                let d = reg.all();
                let (_, _, g_rho) = model.loss_grads(&d.x, &d.y)?;
                let mut r = [model.rho];
                rho_opt.step(&mut r, &[g_rho], cfg.lr_rho).map_err(|_| Error::NonFiniteGradient { step })?;
                model.rho = r[0].max(RHO_MIN);
                rec.reg_steps += 1;
            }
            rec.train_forwards += 1;
        }
        clock.set(Phase::Eval);
        let tr = mse(&linear_forward(model, &train.all().x)?, &data.train.y);
        let rg = mse(&linear_forward(model, &reg.all().x)?, &data.reg.y);
        let te = mse(&linear_forward(model, &test.all().x)?, &data.test.y);
        rec.rows.push(EpochRow { epoch, train_loss: tr, reg_loss: rg, test_metric: te, gen_gap: gen_gap(tr, te, MetricKind::Loss), rho: vec![model.rho] });
        if !(tr.is_finite() && tr <= cfg.abort_loss) {
            rec.aborted = Some(Error::Diverged { step, loss: tr }.to_string());
            break 'outer;
        }
    }
    rec.access.train = train.reads();
    rec.access.reg = reg.reads();
    rec.access.test = test.reads();
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Complexity direction used by [`train_projected`].
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// `sign(w)/‖sign(w)‖`.
    L1,
    /// `DᵀDβ/‖DᵀDβ‖` for the given operator `D`.
    DerivNorm(Matrix),
}

impl Direction {
    /// Unit direction at `w`, or the degenerate-direction error.
    pub fn at(&self, w: &[f64]) -> Result<Vec<f64>> {
        match self {
            Direction::L1 => l1_direction(w),
            Direction::DerivNorm(d) => deriv_norm_direction(w, d),
        }
    }

    /// Complexity value recorded in traces: `‖w‖₁` or `‖Dβ‖²`.
    pub fn complexity(&self, w: &[f64]) -> f64 {
        match self {
            Direction::L1 => w.iter().map(|v| v.abs()).sum(),
            Direction::DerivNorm(d) => {
                let db = d.matvec(w).expect("operator matches weights");
                dot(&db, &db)
            }
        }
    }
}

/// Alternating training of a linear-in-parameters model `ŷ = Φw` whose
/// feature matrices are the `x` of each partition.
///
/// Training steps apply only the part of the training gradient orthogonal to
/// the complexity direction (the whole gradient when the direction is
/// degenerate). Every `reg_interval` steps the regularization-set gradient is
/// projected onto the direction at the current weights and only that part is
/// applied; degenerate directions skip the update.
pub fn train_projected(w: &mut [f64], data: &SplitDataset, cfg: &TrainConfig, direction: &Direction) -> Result<RunRecord> {
    cfg.validate()?;
    if data.train.n_features() != w.len() {
        return Err(Error::Dimension(format!("{} features vs {} weights", data.train.n_features(), w.len())));
    }
    let start = Instant::now();
    let clock = PhaseClock::new();
    let train = Partition::new(&data.train, &clock);
    let reg = Partition::new(&data.reg, &clock);
    let test = Partition::new(&data.test, &clock);
    let mut rng = Rng::new(child_seed(cfg.seed, 1));
    let mut rec = RunRecord::new(cfg);
    let mut theta_opt = OptState::new(cfg.optimizer, w.len());
    let mut rho_opt = OptState::new(cfg.rho_optimizer, w.len());
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        for batch in epoch_batches(train.len(), cfg.batch_size, &mut rng) {
            clock.set(Phase::Theta);
            let (_, g) = if batch.len() == train.len() {
                let d = train.all();
                mse_grad(&d.x, &d.y, w, 0.0)?
            } else {
                let (x, y) = train.rows(&batch);
                mse_grad(&x, &y, w, 0.0)?
            };
            let g_perp = match direction.at(w) {
                Ok(u) => project(&g, &u)?.g_perp,
                Err(Error::DegenerateDirection) => g,
                Err(e) => return Err(e),
            };
            theta_opt.step(w, &g_perp, cfg.lr_theta).map_err(|_| Error::NonFiniteGradient { step })?;
            step += 1;
            rec.train_forwards += 1;
            if is_reg_step(cfg, step) {
                clock.set(Phase::Rho);
                rec.reg_steps += 1;
                match direction.at(w) {
                    Ok(u) => {
                        let d = reg.all();
                        let (_, gv) = mse_grad(&d.x, &d.y, w, 0.0)?;
                        let g_rho = project(&gv, &u)?.g_rho;
                        rho_opt.step(w, &g_rho, cfg.lr_rho).map_err(|_| Error::NonFiniteGradient { step })?;
                    }
                    Err(Error::DegenerateDirection) => rec.skipped_reg_steps += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        clock.set(Phase::Eval);
        let eval = |x: &Matrix, y: &[f64]| -> Result<f64> { Ok(mse(&x.matvec(w)?, y)) };
        let tr = eval(&train.all().x, &data.train.y)?;
        let rg = eval(&reg.all().x, &data.reg.y)?;
        let te = eval(&test.all().x, &data.test.y)?;
        rec.rows.push(EpochRow {
            epoch,
            train_loss: tr,
            reg_loss: rg,
            test_metric: te,
            gen_gap: gen_gap(tr, te, MetricKind::Loss),
            rho: vec![direction.complexity(w)],
        });
        if !(tr.is_finite() && tr <= cfg.abort_loss) {
            rec.aborted = Some(Error::Diverged { step, loss: tr }.to_string());
            break;
        }
    }
    if rec.reg_steps > 0 && 2 * rec.skipped_reg_steps > rec.reg_steps {
        rec.warnings.push(format!(
            "complexity direction degenerate on {} of {} regularization steps",
            rec.skipped_reg_steps, rec.reg_steps
        ));
    }
    rec.access.train = train.reads();
    rec.access.reg = reg.reads();
    rec.access.test = test.reads();
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}
