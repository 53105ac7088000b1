//! Alternating training of the noisy network: minibatch steps on the model
//! weights, and every `reg_interval` steps one update of the noise scales (and
//! the augmentation magnitude, when enabled) on a Monte-Carlo averaged
//! regularization batch.

use super::access::{AccessCounts, Partition, Phase, PhaseClock};
use super::record::EpochRow;
use super::{OptState, RunRecord, TrainConfig};
use crate::datagen::SplitDataset;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, gen_gap, MetricKind};
use crate::models::mlp::{softmax, Noise, NoisyMlp, LOG_SIGMA_MAX};
use crate::numkit::{child_seed, Matrix, Rng};
use crate::regops::{augment_batch, AugmentParams};
use std::time::Instant;

/// Optimizer and random-stream state that survives across data swaps.
///
/// Four independent streams are derived from the seed: minibatch shuffling,
/// training noise, regularization batches (indices, noise and shifts), and
/// training-time shifts. Disabling one mechanism therefore leaves the draws of
/// the others untouched.
pub struct NoisyTrainer<'m> {
    pub model: &'m mut NoisyMlp,
    cfg: TrainConfig,
    alpha: Option<f64>,
    theta_opt: OptState,
    rho_opt: OptState,
    data_rng: Rng,
    noise_rng: Rng,
    reg_rng: Rng,
    aug_rng: Rng,
    step: usize,
    epoch: usize,
    pub record: RunRecord,
    started: Instant,
}

impl<'m> NoisyTrainer<'m> {
    pub fn new(model: &'m mut NoisyMlp, cfg: &TrainConfig, alpha: Option<f64>) -> Result<Self> {
        cfg.validate()?;
        if let Some(a) = alpha {
            if !(a >= 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {a}")));
            }
        }
        let n_rho = if cfg.noise { model.n_layers() } else { 0 } + usize::from(alpha.is_some());
        let theta_opt = OptState::new(cfg.optimizer, model.theta_len());
        Ok(NoisyTrainer {
            model,
            cfg: cfg.clone(),
            alpha,
            theta_opt,
            rho_opt: OptState::new(cfg.rho_optimizer, n_rho),
            data_rng: Rng::new(child_seed(cfg.seed, 1)),
            noise_rng: Rng::new(child_seed(cfg.seed, 2)),
            reg_rng: Rng::new(child_seed(cfg.seed, 3)),
            aug_rng: Rng::new(child_seed(cfg.seed, 4)),
            step: 0,
            epoch: 0,
            record: RunRecord::new(cfg),
            started: Instant::now(),
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    fn rho_snapshot(&self) -> Vec<f64> {
        let mut v = self.model.sigmas();
        if let Some(a) = self.alpha {
            v.push(a);
        }
        v
    }

    /// Runs `n_epochs` further epochs on `data`. Stops early, recording the
    /// reason, when a loss is non-finite or exceeds the abort threshold.
    pub fn run_epochs(&mut self, data: &SplitDataset, n_epochs: usize) -> Result<()> {
        if data.train.n_classes().is_none() {
            return Err(Error::InvalidArgument("noisy training needs a classification dataset".into()));
        }
        let clock = PhaseClock::new();
        let train = Partition::new(&data.train, &clock);
        let reg = Partition::new(&data.reg, &clock);
        let test = Partition::new(&data.test, &clock);
        let result = self.epochs_inner(&clock, &train, &reg, &test, n_epochs);
        self.record.access.add(&AccessCounts { train: train.reads(), reg: reg.reads(), test: test.reads() });
        self.record.wall_time_s = self.started.elapsed().as_secs_f64();
        result
    }

    fn epochs_inner(&mut self, clock: &PhaseClock, train: &Partition, reg: &Partition, test: &Partition, n_epochs: usize) -> Result<()> {
        for _ in 0..n_epochs {
            if self.record.aborted.is_some() {
                return Ok(());
            }
            clock.set(Phase::Theta);
            let perm = self.data_rng.permutation(train.len());
            let (mut loss_sum, mut n_batches) = (0.0, 0usize);
            let (mut reg_sum, mut n_reg) = (0.0, 0usize);
            for chunk in perm.chunks(self.cfg.batch_size) {
                let (mut xb, yb) = train.rows(chunk);
                let labels: Vec<usize> = yb.iter().map(|&v| v as usize).collect();
                if let Some(a) = self.alpha {
                    xb = augment_batch(&xb, &AugmentParams { alpha: a }, &mut self.aug_rng)?.0;
                }
                let noise = if self.cfg.noise { self.model.draw_noise(xb.rows, &mut self.noise_rng) } else { Noise::Zero };
                let (loss, g) = self.model.ce_loss_grad(&xb, &labels, &noise)?;
                self.record.train_forwards += 1;
                if !(loss.is_finite() && loss <= self.cfg.abort_loss) {
                    self.record.aborted = Some(Error::Diverged { step: self.step, loss }.to_string());
                    return Ok(());
                }
                let mut theta = self.model.theta();
                self.theta_opt
                    .step(&mut theta, &g.theta(), self.cfg.lr_theta)
                    .map_err(|_| Error::NonFiniteGradient { step: self.step })?;
                self.model.set_theta(&theta);
                loss_sum += loss;
                n_batches += 1;
                self.step += 1;
                let c = &self.cfg;
                if c.learn_rho && self.step > c.reg_start_step && self.step % c.reg_interval == 0 {
                    clock.set(Phase::Rho);
                    let l = self.reg_update(reg)?;
                    clock.set(Phase::Theta);
                    if !l.is_finite() {
                        self.record.aborted = Some(Error::Diverged { step: self.step, loss: l }.to_string());
                        return Ok(());
                    }
                    reg_sum += l;
                    n_reg += 1;
                }
            }
            clock.set(Phase::Eval);
            let last = self.epoch + 1 == self.cfg.epochs;
            let (test_metric, gap) = if last || (self.epoch + 1) % self.cfg.eval_every == 0 {
                let tr = self.eval_accuracy(train.all(), false)?;
                let te = self.eval_accuracy(test.all(), self.cfg.test_time_augment)?;
                (te, gen_gap(tr, te, MetricKind::Accuracy))
            } else {
                (f64::NAN, f64::NAN)
            };
            self.record.rows.push(EpochRow {
                epoch: self.epoch,
                train_loss: loss_sum / n_batches.max(1) as f64,
                reg_loss: if n_reg > 0 { reg_sum / n_reg as f64 } else { f64::NAN },
                test_metric,
                gen_gap: gap,
                rho: self.rho_snapshot(),
            });
            self.epoch += 1;
        }
        Ok(())
    }

    /// One regularization step; returns the MC-averaged regularization loss.
    fn reg_update(&mut self, reg: &Partition) -> Result<f64> {
        let n = reg.len();
        let m = n.min(self.cfg.batch_size);
        let idx: Vec<usize> = (0..m).map(|_| self.reg_rng.below(n)).collect();
        let (xr, yr) = reg.rows(&idx);
        let labels: Vec<usize> = yr.iter().map(|&v| v as usize).collect();
        let k = self.cfg.mc_samples;
        let mut xs = Vec::with_capacity(k);
        let mut dxs = Vec::with_capacity(k);
        let mut noises = Vec::with_capacity(k);
        for _ in 0..k {
            match self.alpha {
                Some(a) => {
                    let (x, d) = augment_batch(&xr, &AugmentParams { alpha: a }, &mut self.reg_rng)?;
                    xs.push(x);
                    dxs.push(d);
                }
                None => xs.push(xr.clone()),
            }
            noises.push(if self.cfg.noise { self.model.draw_noise(m, &mut self.reg_rng) } else { Noise::Zero });
        }
        let out = self.model.mc_nll(&xs, &noises, &labels, self.cfg.mc_space)?;
        self.record.reg_forwards += k;
        self.record.reg_steps += 1;
        let mut rho = Vec::new();
        let mut grad = Vec::new();
        if self.cfg.noise {
            rho.extend_from_slice(&self.model.log_sigma);
            grad.extend_from_slice(&out.grads.log_sigma);
        }
        if let Some(a) = self.alpha {
            rho.push(a);
            let g: f64 = out
                .input_grads
                .iter()
                .zip(&dxs)
                .map(|(gi, di)| gi.data.iter().zip(&di.data).map(|(p, q)| p * q).sum::<f64>())
                .sum();
            grad.push(g);
        }
        self.rho_opt
            .step(&mut rho, &grad, self.cfg.lr_rho)
            .map_err(|_| Error::NonFiniteGradient { step: self.step })?;
        let mut it = rho.into_iter();
        if self.cfg.noise {
            for ls in self.model.log_sigma.iter_mut() {
                *ls = it.next().expect("log sigma slot").min(LOG_SIGMA_MAX);
            }
        }
        if self.alpha.is_some() {
            self.alpha = Some(it.next().expect("alpha slot").clamp(0.0, self.cfg.alpha_max));
        }
        Ok(out.loss)
    }

    fn eval_accuracy(&mut self, d: &crate::datagen::Dataset, augment: bool) -> Result<f64> {
        let labels = d.labels();
        let p = match (augment, self.alpha) {
            (true, Some(a)) => {
                let k = self.cfg.mc_samples;
                let mut acc = Matrix::zeros(d.len(), self.model.n_classes());
                for _ in 0..k {
                    let x = augment_batch(&d.x, &AugmentParams { alpha: a }, &mut self.aug_rng)?.0;
                    let p = softmax(&self.model.forward(&x, &Noise::Zero)?.logits);
                    acc.data.iter_mut().zip(&p.data).for_each(|(s, v)| *s += v / k as f64);
                }
                acc
            }
            _ => self.model.predict_proba(&d.x)?,
        };
        Ok(accuracy(&p, &labels))
    }

    pub fn finish(self) -> RunRecord {
        self.record
    }
}

/// Trains `model` for `cfg.epochs` epochs. With `augment`, the shift
/// magnitude is learned alongside the noise scales and written back.
pub fn train_noisy(model: &mut NoisyMlp, data: &SplitDataset, cfg: &TrainConfig, augment: Option<&mut AugmentParams>) -> Result<RunRecord> {
    let alpha = augment.as_ref().map(|a| a.alpha);
    let mut t = NoisyTrainer::new(model, cfg, alpha)?;
    t.run_epochs(data, cfg.epochs)?;
    if let (Some(p), Some(a)) = (augment, t.alpha()) {
        p.alpha = a;
    }
    Ok(t.finish())
}

/// Trains on `data_small` for `transition_epoch` epochs, then continues the same
/// parameter and optimizer state on `data_full` up to `cfg.epochs` in total.
pub fn train_growth(
    model: &mut NoisyMlp,
    data_small: &SplitDataset,
    data_full: &SplitDataset,
    transition_epoch: usize,
    cfg: &TrainConfig,
) -> Result<RunRecord> {
    let full: std::collections::HashSet<usize> = data_full.indices[0].iter().copied().collect();
    if data_small.indices[0].iter().any(|i| !full.contains(i)) {
        return Err(Error::InvalidArgument("small training set is not a subset of the full one".into()));
    }
    let transition = transition_epoch.min(cfg.epochs);
    let mut t = NoisyTrainer::new(model, cfg, None)?;
    t.run_epochs(data_small, transition)?;
    t.run_epochs(data_full, cfg.epochs - transition)?;
    Ok(t.finish())
}
