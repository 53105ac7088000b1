//! Feedforward classifier with per-layer normalization and learnable additive
//! Gaussian noise: `h_l = relu(LN(h_{l−1} W_l) + σ_l ε_l)`, logits `= h_L W + b`.
//!
//! Weights are stored input-major (`in × out`) so a batch forward is a plain
//! row-major product. Layer norm has no affine parameters.

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};
use serde::{Deserialize, Serialize};

/// Variance floor inside the layer-norm square root.
pub const LN_EPS: f64 = 1e-5;

/// Upper clamp on `log σ`.
pub const LOG_SIGMA_MAX: f64 = 5.0;

/// Where the K stochastic passes are averaged before the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McSpace {
    /// Mean of softmax probabilities.
    Probability,
    /// Softmax of the mean logits.
    Logit,
}

/// Noise fed to one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// Deterministic prediction, `ε = 0`.
    Zero,
    /// One `batch × width` standard-normal matrix per hidden layer.
    Draw(Vec<Matrix>),
}

/// Network parameters. `log_sigma` may be `-inf`, meaning no noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyMlp {
    pub weights: Vec<Matrix>,
    pub log_sigma: Vec<f64>,
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

/// Gradients matching the layout of [`NoisyMlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub log_sigma: Vec<f64>,
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    /// Normalized pre-activations, one per layer.
    uhat: Vec<Matrix>,
    /// Per-row `sqrt(var + eps)`, one per layer.
    scale: Vec<Vec<f64>>,
    /// Post-noise pre-activations.
    z: Vec<Matrix>,
    /// Rectified outputs.
    h: Vec<Matrix>,
    noise: Noise,
    pub logits: Matrix,
}

impl ForwardCache {
    /// Layer-normalized pre-activations before noise, one per hidden layer.
    pub fn normalized(&self) -> &[Matrix] {
        &self.uhat
    }

    /// Pre-activations after noise injection, the inputs of each rectifier.
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.z
    }
}

/// Result of an MC-averaged negative log-likelihood evaluation.
#[derive(Debug, Clone)]
pub struct McOutput {
    pub loss: f64,
    /// Batch × classes averaged probabilities.
    pub probs: Matrix,
    pub grads: MlpGrads,
    /// Gradient of the loss with respect to each of the K input batches.
    pub input_grads: Vec<Matrix>,
}

impl NoisyMlp {
    /// `dims = [input, hidden…, classes]`. Weights drawn from `U(±1/√fan_in)`.
    pub fn new(dims: &[usize], log_sigma_init: f64, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidArgument("need input, at least one hidden layer, and output".into()));
        }
        let init = |rows: usize, cols: usize, rng: &mut Rng| {
            let bound = 1.0 / (rows as f64).sqrt();
            let data = (0..rows * cols).map(|_| rng.uniform_in(-bound, bound)).collect();
            Matrix { rows, cols, data }
        };
        let n_hidden = dims.len() - 2;
        let weights: Vec<Matrix> = (0..n_hidden).map(|l| init(dims[l], dims[l + 1], rng)).collect();
        let h = dims[n_hidden];
        let c = dims[n_hidden + 1];
        let head_w = init(h, c, rng);
        let bound = 1.0 / (h as f64).sqrt();
        let head_b = (0..c).map(|_| rng.uniform_in(-bound, bound)).collect();
        Ok(NoisyMlp { weights, log_sigma: vec![log_sigma_init; n_hidden], head_w, head_b })
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].rows
    }

    pub fn n_classes(&self) -> usize {
        self.head_b.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.weights.iter().map(|w| w.cols).collect()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|l| l.exp()).collect()
    }

    /// Standard-normal noise for a batch of `batch` rows.
    pub fn draw_noise(&self, batch: usize, rng: &mut Rng) -> Noise {
        Noise::Draw(
            self.widths()
                .iter()
                .map(|&w| Matrix { rows: batch, cols: w, data: (0..batch * w).map(|_| rng.normal()).collect() })
                .collect(),
        )
    }

    /// Number of entries in the flattened model-parameter vector.
    pub fn theta_len(&self) -> usize {
        self.weights.iter().map(|w| w.data.len()).sum::<usize>() + self.head_w.data.len() + self.head_b.len()
    }

    /// Weights, head weights and head bias concatenated.
    pub fn theta(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.theta_len());
        for w in &self.weights {
            v.extend_from_slice(&w.data);
        }
        v.extend_from_slice(&self.head_w.data);
        v.extend_from_slice(&self.head_b);
        v
    }

    pub fn set_theta(&mut self, v: &[f64]) {
        let mut o = 0;
        for w in self.weights.iter_mut() {
            let n = w.data.len();
            w.data.copy_from_slice(&v[o..o + n]);
            o += n;
        }
        let n = self.head_w.data.len();
        self.head_w.data.copy_from_slice(&v[o..o + n]);
        o += n;
        let nb = self.head_b.len();
        self.head_b.copy_from_slice(&v[o..o + nb]);
    }

    /// Batch forward pass keeping what the backward pass needs.
    pub fn forward(&self, x: &Matrix, noise: &Noise) -> Result<ForwardCache> {
        if x.cols != self.input_dim() {
            return Err(Error::Dimension(format!("input has {} features, network expects {}", x.cols, self.input_dim())));
        }
        if let Noise::Draw(eps) = noise {
            if eps.len() != self.n_layers()
                || eps.iter().zip(self.widths()).any(|(e, w)| e.rows != x.rows || e.cols != w)
            {
                return Err(Error::Dimension("noise draw does not match batch and layer widths".into()));
            }
        }
        let b = x.rows;
        let mut uhat = Vec::with_capacity(self.n_layers());
        let mut scale = Vec::with_capacity(self.n_layers());
        let mut zs = Vec::with_capacity(self.n_layers());
        let mut hs: Vec<Matrix> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let prev = if l == 0 { x } else { &hs[l - 1] };
            let mut u = prev.matmul(&self.weights[l])?;
            let w = u.cols;
            let mut sc = Vec::with_capacity(b);
            for r in 0..b {
                let row = u.row_mut(r);
                let m = row.iter().sum::<f64>() / w as f64;
                let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / w as f64;
                let s = (var + LN_EPS).sqrt();
                row.iter_mut().for_each(|v| *v = (*v - m) / s);
                sc.push(s);
            }
            let mut z = u.clone();
            if let Noise::Draw(eps) = noise {
                let sigma = self.log_sigma[l].exp();
                for (zv, e) in z.data.iter_mut().zip(&eps[l].data) {
                    *zv += sigma * e;
                }
            }
            let h = Matrix { rows: b, cols: w, data: z.data.iter().map(|v| v.max(0.0)).collect() };
            uhat.push(u);
            scale.push(sc);
            zs.push(z);
            hs.push(h);
        }
        let mut logits = hs[self.n_layers() - 1].matmul(&self.head_w)?;
        for r in 0..b {
            for (v, bb) in logits.row_mut(r).iter_mut().zip(&self.head_b) {
                *v += bb;
            }
        }
        Ok(ForwardCache { input: x.clone(), uhat, scale, z: zs, h: hs, noise: noise.clone(), logits })
    }

    /// Backpropagates `d_logits`. Returns parameter gradients and the input gradient.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &Matrix) -> (MlpGrads, Matrix) {
        let b = d_logits.rows;
        let last = self.n_layers() - 1;
        let head_w = t_matmul(&cache.h[last], d_logits);
        let mut head_b = vec![0.0; self.n_classes()];
        for r in 0..b {
            for (g, d) in head_b.iter_mut().zip(d_logits.row(r)) {
                *g += d;
            }
        }
        let mut dh = matmul_t(d_logits, &self.head_w);
        let mut gw = vec![Matrix::zeros(0, 0); self.n_layers()];
        let mut gls = vec![0.0; self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            let w = self.weights[l].cols;
            // Through the rectifier.
            for (d, z) in dh.data.iter_mut().zip(&cache.z[l].data) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
            if let Noise::Draw(eps) = &cache.noise {
                let sigma = self.log_sigma[l].exp();
                let s: f64 = dh.data.iter().zip(&eps[l].data).map(|(d, e)| d * e).sum();
                gls[l] = if sigma > 0.0 { sigma * s } else { 0.0 };
            }
            // Through the normalization.
            let uh = &cache.uhat[l];
            for r in 0..b {
                let row = dh.row_mut(r);
                let ur = uh.row(r);
                let m1 = row.iter().sum::<f64>() / w as f64;
                let m2 = row.iter().zip(ur).map(|(d, u)| d * u).sum::<f64>() / w as f64;
                let s = cache.scale[l][r];
                for (d, u) in row.iter_mut().zip(ur) {
                    *d = (*d - m1 - u * m2) / s;
                }
            }
            let prev = if l == 0 { &cache.input } else { &cache.h[l - 1] };
            gw[l] = t_matmul(prev, &dh);
            dh = matmul_t(&dh, &self.weights[l]);
        }
        (MlpGrads { weights: gw, log_sigma: gls, head_w, head_b }, dh)
    }

    /// Mean cross-entropy of one forward pass with its gradients.
    pub fn ce_loss_grad(&self, x: &Matrix, labels: &[usize], noise: &Noise) -> Result<(f64, MlpGrads)> {
        let cache = self.forward(x, noise)?;
        let p = softmax(&cache.logits);
        let b = x.rows as f64;
        let mut loss = 0.0;
        let mut d = p.clone();
        for (r, &y) in labels.iter().enumerate() {
            loss -= p.get(r, y).max(f64::MIN_POSITIVE).ln();
            d.row_mut(r)[y] -= 1.0;
        }
        d.data.iter_mut().for_each(|v| *v /= b);
        let (g, _) = self.backward(&cache, &d);
        Ok((loss / b, g))
    }

    /// Negative log-likelihood of the prediction averaged over `xs.len()`
    /// stochastic passes; pass `k` uses input `xs[k]` and noise `noises[k]`.
    pub fn mc_nll(&self, xs: &[Matrix], noises: &[Noise], labels: &[usize], space: McSpace) -> Result<McOutput> {
        let k = xs.len();
        if k == 0 || noises.len() != k {
            return Err(Error::InvalidArgument("need K >= 1 inputs with matching noise draws".into()));
        }
        let b = labels.len();
        let c = self.n_classes();
        let kf = k as f64;
        let mut caches = Vec::with_capacity(k);
        let mut ps = Vec::with_capacity(k);
        let mut mean = Matrix::zeros(b, c);
        for (x, nz) in xs.iter().zip(noises) {
            let cache = self.forward(x, nz)?;
            let p = match space {
                McSpace::Probability => softmax(&cache.logits),
                McSpace::Logit => cache.logits.clone(),
            };
            for (a, v) in mean.data.iter_mut().zip(&p.data) {
                *a += v / kf;
            }
            caches.push(cache);
            ps.push(p);
        }
        let pbar = match space {
            McSpace::Probability => mean,
            McSpace::Logit => softmax(&mean),
        };
        let loss = -labels.iter().enumerate().map(|(r, &y)| pbar.get(r, y).max(f64::MIN_POSITIVE).ln()).sum::<f64>() / b as f64;
        let mut grads = self.zero_grads();
        let mut input_grads = Vec::with_capacity(k);
        for (cache, p) in caches.iter().zip(&ps) {
            let mut d = Matrix::zeros(b, c);
            for (r, &y) in labels.iter().enumerate() {
                let row = d.row_mut(r);
                match space {
                    McSpace::Probability => {
                        let coef = -p.get(r, y) / (b as f64 * kf * pbar.get(r, y).max(f64::MIN_POSITIVE));
                        for (j, dv) in row.iter_mut().enumerate() {
                            let delta = if j == y { 1.0 } else { 0.0 };
                            *dv = coef * (delta - p.get(r, j));
                        }
                    }
                    McSpace::Logit => {
                        for (j, dv) in row.iter_mut().enumerate() {
                            let delta = if j == y { 1.0 } else { 0.0 };
                            *dv = (pbar.get(r, j) - delta) / (b as f64 * kf);
                        }
                    }
                }
            }
            let (g, dx) = self.backward(cache, &d);
            grads.add_assign(&g);
            input_grads.push(dx);
        }
        Ok(McOutput { loss, probs: pbar, grads, input_grads })
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect(),
            log_sigma: vec![0.0; self.n_layers()],
            head_w: Matrix::zeros(self.head_w.rows, self.head_w.cols),
            head_b: vec![0.0; self.n_classes()],
        }
    }

    /// Deterministic class probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        Ok(softmax(&self.forward(x, &Noise::Zero)?.logits))
    }
}

impl MlpGrads {
    /// Flattened in the same order as [`NoisyMlp::theta`].
    pub fn theta(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for w in &self.weights {
            v.extend_from_slice(&w.data);
        }
        v.extend_from_slice(&self.head_w.data);
        v.extend_from_slice(&self.head_b);
        v
    }

    pub fn add_assign(&mut self, o: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&o.weights) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
        self.head_w.data.iter_mut().zip(&o.head_w.data).for_each(|(x, y)| *x += y);
        self.head_b.iter_mut().zip(&o.head_b).for_each(|(x, y)| *x += y);
        self.log_sigma.iter_mut().zip(&o.log_sigma).for_each(|(x, y)| *x += y);
    }
}

/// Logits for input batch `x` under the given noise.
pub fn mlp_forward(m: &NoisyMlp, x: &Matrix, eps: &Noise) -> Result<Matrix> {
    Ok(m.forward(x, eps)?.logits)
}

/// Mean over `k` stochastic passes of the softmax probabilities.
pub fn mc_predict(m: &NoisyMlp, x: &Matrix, k: usize, rng: &mut Rng) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let mut acc = Matrix::zeros(x.rows, m.n_classes());
    for _ in 0..k {
        let nz = m.draw_noise(x.rows, rng);
        let p = softmax(&m.forward(x, &nz)?.logits);
        acc.data.iter_mut().zip(&p.data).for_each(|(a, v)| *a += v / k as f64);
    }
    Ok(acc)
}

/// Row-wise softmax.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut p = logits.clone();
    for r in 0..p.rows {
        let row = p.row_mut(r);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    p
}

// aᵀ b for a: n×p, b: n×q.
fn t_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.cols, b.cols);
    for r in 0..a.rows {
        let br = b.row(r);
        for (i, &av) in a.row(r).iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (o, bv) in out.row_mut(i).iter_mut().zip(br) {
                *o += av * bv;
            }
        }
    }
    out
}

// a bᵀ for a: n×q, b: p×q.
fn matmul_t(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows, b.rows);
    for r in 0..a.rows {
        let ar = a.row(r);
        for i in 0..b.rows {
            out.data[r * b.rows + i] = crate::numkit::dot(ar, b.row(i));
        }
    }
    out
}
