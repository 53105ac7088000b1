//! Synthetic generators, CSV ingestion and seeded train / regularization / test
//! splitting.

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Whether targets are real values or class labels stored as `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

/// Per-column affine map applied by [`load_csv`] when standardizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Inputs `x` (one row per sample) with targets `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub task: Task,
    /// Generating coefficients, when known.
    pub w_true: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, task: Task) -> Result<Self> {
        if x.rows != y.len() {
            return Err(Error::Dimension(format!("{} rows but {} targets", x.rows, y.len())));
        }
        if let Task::Classification { n_classes } = task {
            if let Some(bad) = y.iter().find(|&&v| v < 0.0 || v >= n_classes as f64 || v.fract() != 0.0) {
                return Err(Error::InvalidArgument(format!("label {bad} outside 0..{n_classes}")));
            }
        }
        let feature_names = (0..x.cols).map(|j| format!("x{j}")).collect();
        Ok(Dataset { x, y, task, w_true: None, feature_names, standardization: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self.task {
            Task::Classification { n_classes } => Some(n_classes),
            Task::Regression => None,
        }
    }

    /// Integer labels; zero for regression data.
    pub fn labels(&self) -> Vec<usize> {
        self.y.iter().map(|&v| v as usize).collect()
    }

    /// Rows selected by `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            task: self.task,
            w_true: self.w_true.clone(),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
        }
    }
}

/// Correlated-feature regression problem.
///
/// The first `n_base` columns are independent standard normals; column
/// `j ≥ n_base` copies base column `(j − n_base) mod n_base` plus
/// `N(0, noise_sd²)`. The `k`-th member of each group has true coefficient
/// `(−1)^k`, and `y = X w_true + 0.5 ε`.
pub fn gen_correlated(n_base: usize, n_total: usize, noise_sd: f64, n_samples: usize, rng: &mut Rng) -> Result<Dataset> {
    if n_base == 0 || n_total < n_base {
        return Err(Error::InvalidArgument(format!("need 1 <= n_base <= n_total, got {n_base}, {n_total}")));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let mut x = Matrix::zeros(n_samples, n_total);
    for i in 0..n_samples {
        for j in 0..n_base {
            x.set(i, j, rng.normal());
        }
    }
    for i in 0..n_samples {
        for j in n_base..n_total {
            let b = x.get(i, (j - n_base) % n_base);
            x.set(i, j, b + noise_sd * rng.normal());
        }
    }
    let w_true: Vec<f64> = (0..n_total).map(|j| if (j / n_base) % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut y = x.matvec(&w_true)?;
    for v in y.iter_mut() {
        *v += 0.5 * rng.normal();
    }
    let mut ds = Dataset::new(x, y, Task::Regression)?;
    ds.w_true = Some(w_true);
    Ok(ds)
}

/// Lower and upper edge of the interval left empty by [`gen_spline`].
pub const SPLINE_GAP: (f64, f64) = (0.55, 0.7);

/// Noise-free regression function of the spline problem.
pub fn spline_mean(x: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.5 * (8.0 * PI * x).sin()
}

/// Heteroscedastic 1D regression with a gap: `x ∼ U[0,1] \ [0.55, 0.7]`,
/// `y = spline_mean(x) + N(0, ((0.5 + x)·0.3)²)`.
pub fn gen_spline(n_points: usize, rng: &mut Rng) -> Result<Dataset> {
    if n_points < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {n_points}")));
    }
    let mut xs = Vec::with_capacity(n_points);
    while xs.len() < n_points {
        let x = rng.uniform();
        if !(SPLINE_GAP.0..=SPLINE_GAP.1).contains(&x) {
            xs.push(x);
        }
    }
    let y = xs.iter().map(|&x| spline_mean(x) + rng.normal() * (0.5 + x) * 0.3).collect();
    Dataset::new(Matrix::from_vec(n_points, 1, xs)?, y, Task::Regression)
}

/// 2D Gaussian clusters (unit variance) centred on a circle of radius `sep`.
/// A fraction `label_noise` of samples get a label redrawn uniformly over all classes.
pub fn gen_blobs(n_classes: usize, n_samples: usize, sep: f64, label_noise: f64, rng: &mut Rng) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {n_classes}")));
    }
    if !(0.0..1.0).contains(&label_noise) {
        return Err(Error::InvalidArgument(format!("label_noise must be in [0,1), got {label_noise}")));
    }
    let mut x = Matrix::zeros(n_samples, 2);
    let mut y = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let c = rng.below(n_classes);
        let (cx, cy) = blob_center(c, n_classes, sep);
        x.set(i, 0, cx + rng.normal());
        x.set(i, 1, cy + rng.normal());
        let label = if rng.uniform() < label_noise { rng.below(n_classes) } else { c };
        y.push(label as f64);
    }
    Dataset::new(x, y, Task::Classification { n_classes })
}

/// Centre of blob `c` out of `n_classes`.
pub fn blob_center(c: usize, n_classes: usize, sep: f64) -> (f64, f64) {
    let a = 2.0 * PI * c as f64 / n_classes as f64;
    (sep * a.cos(), sep * a.sin())
}

/// Parameters of the 1D bump-position classification task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub length: usize,
    pub n_classes: usize,
    /// Uniform jitter half-width of the bump centre, in index units.
    pub jitter: f64,
    /// Gaussian bump width, in index units.
    pub width: f64,
    pub noise_sd: f64,
    pub label_noise: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec { length: 32, n_classes: 4, jitter: 2.0, width: 1.5, noise_sd: 0.5, label_noise: 0.1 }
    }
}

/// Circular signals carrying one Gaussian bump whose nominal position encodes the
/// class: centre `(c + 0.5)·length/n_classes` plus uniform jitter. Small shifts
/// preserve the label; shifts near half the class spacing do not.
pub fn gen_shift_signals(spec: &SignalSpec, n_samples: usize, rng: &mut Rng) -> Result<Dataset> {
    if spec.length < 2 || spec.n_classes < 2 {
        return Err(Error::InvalidArgument("signal length and class count must be >= 2".into()));
    }
    let l = spec.length;
    let spacing = l as f64 / spec.n_classes as f64;
    let mut x = Matrix::zeros(n_samples, l);
    let mut y = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let c = rng.below(spec.n_classes);
        let centre = (c as f64 + 0.5) * spacing + rng.uniform_in(-spec.jitter, spec.jitter);
        let row = x.row_mut(i);
        for (k, v) in row.iter_mut().enumerate() {
            let mut d = (k as f64 - centre).abs();
            d = d.min(l as f64 - d);
            *v = (-d * d / (2.0 * spec.width * spec.width)).exp();
        }
        for v in row.iter_mut() {
            *v += spec.noise_sd * rng.normal();
        }
        let label = if rng.uniform() < spec.label_noise { rng.below(spec.n_classes) } else { c };
        y.push(label as f64);
    }
    Dataset::new(x, y, Task::Classification { n_classes: spec.n_classes })
}

/// Reads a headed, comma-separated numeric file.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, standardize: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_csv(&text, target_column, standardize)
}

/// [`load_csv`] on in-memory text. Rows and columns in errors are 1-based, header is row 1.
pub fn parse_csv(text: &str, target_column: &str, standardize: bool) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse { row: 1, col: 0, message: "empty file".into() })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let t = names
        .iter()
        .position(|n| n == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
    let mut feats = Vec::new();
    let mut y = Vec::new();
    let mut n_rows = 0;
    for (lineno, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(Error::Parse {
                row: lineno + 1,
                col: cells.len(),
                message: format!("expected {} cells", names.len()),
            });
        }
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: lineno + 1,
                col: c + 1,
                message: format!("non-numeric cell `{}`", cell.trim()),
            })?;
            if c == t {
                y.push(v);
            } else {
                feats.push(v);
            }
        }
        n_rows += 1;
    }
    let p = names.len() - 1;
    let mut x = Matrix::from_vec(n_rows, p, feats)?;
    let mut stats = None;
    if standardize {
        let s = column_stats(&x);
        apply_standardization(&mut x, &s);
        stats = Some(s);
    }
    let mut ds = Dataset::new(x, y, Task::Regression)?;
    ds.feature_names = names.into_iter().enumerate().filter(|&(i, _)| i != t).map(|(_, n)| n).collect();
    ds.standardization = stats;
    Ok(ds)
}

/// Column means and population standard deviations. Constant columns get std 1.
pub fn column_stats(x: &Matrix) -> Standardization {
    let n = x.rows as f64;
    let mut means = vec![0.0; x.cols];
    for r in 0..x.rows {
        for (m, v) in means.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; x.cols];
    for r in 0..x.rows {
        for ((s, v), m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = vars.iter().map(|v| if *v > 0.0 { (v / n).sqrt() } else { 1.0 }).collect();
    Standardization { means, stds }
}

/// In-place `(x − mean) / std` per column.
pub fn apply_standardization(x: &mut Matrix, s: &Standardization) {
    for r in 0..x.rows {
        for ((v, m), sd) in x.row_mut(r).iter_mut().zip(&s.means).zip(&s.stds) {
            *v = (*v - m) / sd;
        }
    }
}

/// Three disjoint partitions of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Dataset,
    pub reg: Dataset,
    pub test: Dataset,
    pub fractions: (f64, f64, f64),
    /// Source row indices of train, reg and test, in that order.
    pub indices: [Vec<usize>; 3],
}

/// Random permutation followed by contiguous slicing. Train and reg sizes are
/// `round(fraction · n)`; test takes the remainder.
pub fn split(ds: &Dataset, fractions: (f64, f64, f64), rng: &mut Rng) -> Result<SplitDataset> {
    let (a, b, c) = fractions;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("fractions {fractions:?} must be positive and sum to 1")));
    }
    let n = ds.len();
    let n_train = (a * n as f64).round() as usize;
    let n_reg = (b * n as f64).round() as usize;
    if n_train == 0 || n_reg == 0 || n_train + n_reg >= n {
        return Err(Error::InvalidArgument(format!("split of {n} samples by {fractions:?} leaves a partition empty")));
    }
    let perm = rng.permutation(n);
    let tr = perm[..n_train].to_vec();
    let rg = perm[n_train..n_train + n_reg].to_vec();
    let te = perm[n_train + n_reg..].to_vec();
    Ok(SplitDataset {
        train: ds.subset(&tr),
        reg: ds.subset(&rg),
        test: ds.subset(&te),
        fractions,
        indices: [tr, rg, te],
    })
}

impl SplitDataset {
    /// Same split with the training partition cut to its first `frac` share
    /// (at least one sample). Reg and test partitions are unchanged.
    pub fn with_train_fraction(&self, frac: f64) -> SplitDataset {
        let n = ((self.train.len() as f64 * frac).round() as usize).clamp(1, self.train.len());
        let idx: Vec<usize> = (0..n).collect();
        let mut out = self.clone();
        out.train = self.train.subset(&idx);
        out.indices[0] = self.indices[0][..n].to_vec();
        out
    }
}
