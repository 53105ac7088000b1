//! Evaluation metrics: accuracy, generalization gap, expected calibration
//! error, and the sample-size sweep for the learned noise scale.

use crate::error::{Error, Result};
use crate::models::gaussian::{gaussian_nll, GaussianUnivariate};
use crate::numkit::{child_seed, Matrix, Rng};
use serde::{Deserialize, Serialize};

pub use crate::models::linear::mse;

/// Row-wise argmax.
pub fn argmax_rows(p: &Matrix) -> Vec<usize> {
    (0..p.rows)
        .map(|r| {
            let row = p.row(r);
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(p: &Matrix, labels: &[usize]) -> f64 {
    let pred = argmax_rows(p);
    pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64
}

/// What a metric measures, which fixes the sign of [`gen_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    /// Higher is better.
    Accuracy,
    /// Lower is better.
    Loss,
}

/// Generalization gap, positive when the model does better on train than on test:
/// `train − test` for accuracies, `test − train` for losses.
pub fn gen_gap(train_metric: f64, test_metric: f64, kind: MetricKind) -> f64 {
    match kind {
        MetricKind::Accuracy => train_metric - test_metric,
        MetricKind::Loss => test_metric - train_metric,
    }
}

/// One confidence bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalBin {
    pub low: f64,
    pub high: f64,
    pub mean_conf: f64,
    pub accuracy: f64,
    pub count: usize,
}

/// Reliability bins and expected calibration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalBin>,
    pub ece: f64,
    pub n: usize,
}

impl CalibrationReport {
    /// `bin_low,bin_high,mean_conf,accuracy,count` rows, then an `ece` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_low,bin_high,mean_conf,accuracy,count\n");
        for b in &self.bins {
            s.push_str(&format!("{},{},{},{},{}\n", b.low, b.high, b.mean_conf, b.accuracy, b.count));
        }
        s.push_str(&format!("ece,{}\n", self.ece));
        s
    }
}

/// Default bin count for [`ece`].
pub const ECE_BINS: usize = 15;

/// Bin of confidence `c`: bin `b` covers `(b/n, (b+1)/n]`, bin 0 also takes 0.
pub fn conf_bin(c: f64, n_bins: usize) -> usize {
    let nb = n_bins as f64;
    let mut b = ((c * nb).floor() as usize).min(n_bins - 1);
    while b > 0 && c <= b as f64 / nb {
        b -= 1;
    }
    while b + 1 < n_bins && c > (b + 1) as f64 / nb {
        b += 1;
    }
    b
}

/// Equal-width binning of the max probability; `ece = Σ (count/n)·|acc − conf|`.
pub fn ece(probs: &Matrix, labels: &[usize], n_bins: usize) -> Result<CalibrationReport> {
    if probs.rows == 0 || labels.len() != probs.rows {
        return Err(Error::InvalidArgument("ece needs a nonempty batch with one label per row".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    for r in 0..probs.rows {
        let s: f64 = probs.row(r).iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("row {r} sums to {s}")));
        }
    }
    let pred = argmax_rows(probs);
    let mut conf = vec![0.0; n_bins];
    let mut hit = vec![0.0; n_bins];
    let mut cnt = vec![0usize; n_bins];
    for r in 0..probs.rows {
        let c = probs.get(r, pred[r]);
        let b = conf_bin(c, n_bins);
        conf[b] += c;
        hit[b] += if pred[r] == labels[r] { 1.0 } else { 0.0 };
        cnt[b] += 1;
    }
    let n = probs.rows;
    let mut bins = Vec::with_capacity(n_bins);
    let mut e = 0.0;
    for b in 0..n_bins {
        let (mc, acc) = if cnt[b] > 0 { (conf[b] / cnt[b] as f64, hit[b] / cnt[b] as f64) } else { (0.0, 0.0) };
        e += cnt[b] as f64 / n as f64 * (acc - mc).abs();
        bins.push(CalBin { low: b as f64 / n_bins as f64, high: (b + 1) as f64 / n_bins as f64, mean_conf: mc, accuracy: acc, count: cnt[b] });
    }
    Ok(CalibrationReport { bins, ece: e, n })
}

/// Population of the univariate problem: `x ∼ N(0,1)`, `y = w* x + σ* ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProblem {
    pub w_star: f64,
    pub sigma_star: f64,
    /// Alternating gradient steps per fit.
    pub steps: usize,
    pub lr_w: f64,
    pub lr_log_sigma: f64,
}

impl Default for GaussianProblem {
    fn default() -> Self {
        GaussianProblem { w_star: 2.0, sigma_star: 0.5, steps: 400, lr_w: 0.2, lr_log_sigma: 0.2 }
    }
}

impl GaussianProblem {
    /// `m` draws of `(x, y)`.
    pub fn sample(&self, m: usize, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        let y = x.iter().map(|&xi| self.w_star * xi + self.sigma_star * rng.normal()).collect();
        (x, y)
    }

    /// Alternating fit: `w` descends the training likelihood, `log σ` the
    /// regularization-set likelihood. The `w` step is scaled by the current
    /// `σ²`, which keeps it stable as `σ` shrinks. Returns the final model.
    pub fn fit(&self, train: (&[f64], &[f64]), reg: (&[f64], &[f64])) -> GaussianUnivariate {
        let mut g = GaussianUnivariate { w: 0.0, sigma: 1.0 };
        for _ in 0..self.steps {
            let gt = gaussian_nll(&g, train.0, train.1);
            g.w -= self.lr_w * g.sigma * g.sigma * gt.d_w;
            let gr = gaussian_nll(&g, reg.0, reg.1);
            g.sigma = (g.sigma.ln() - self.lr_log_sigma * gr.d_log_sigma).exp();
        }
        g
    }
}

/// Squared error of the learned `log σ` against its population value, by sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub sizes: Vec<usize>,
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Adjacent size pairs where the mean error went up.
    pub violations: usize,
}

/// Least-squares slope of `ln err` against `ln m`.
pub fn loglog_slope(sizes: &[usize], errors: &[f64]) -> Result<f64> {
    if sizes.len() < 2 || sizes.len() != errors.len() {
        return Err(Error::InvalidArgument("need at least two (size, error) points".into()));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("errors must be positive".into()));
    }
    let lx: Vec<f64> = sizes.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ols_slope(&lx, &ly))
}

pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Mean squared `log σ` error at each size over `repeats` independent draws of
/// train and reg sets of size `m`, plus the log-log slope.
pub fn stat_rate_sweep(problem: &GaussianProblem, sizes: &[usize], repeats: usize, seed: u64) -> Result<RateFit> {
    if repeats < 30 {
        return Err(Error::InvalidArgument(format!("need at least 30 repeats, got {repeats}")));
    }
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sizes must be strictly increasing with at least two entries".into()));
    }
    let target = problem.sigma_star.ln();
    let mut errors = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let mut acc = 0.0;
        for rep in 0..repeats {
            let mut rng = Rng::new(child_seed(seed, (m as u64) << 32 | rep as u64));
            let (xt, yt) = problem.sample(m, &mut rng);
            let (xr, yr) = problem.sample(m, &mut rng);
            let g = problem.fit((&xt, &yt), (&xr, &yr));
            acc += (g.sigma.ln() - target).powi(2);
        }
        errors.push(acc / repeats as f64);
    }
    let slope = loglog_slope(sizes, &errors)?;
    let violations = errors.windows(2).filter(|w| w[1] > w[0]).count();
    Ok(RateFit { sizes: sizes.to_vec(), errors, slope, violations })
}
