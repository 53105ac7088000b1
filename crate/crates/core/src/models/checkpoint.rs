//! JSON checkpoints with bit-exact `f64` storage.
//!
//! Each value is written as the 16-digit hex of its IEEE-754 bit pattern, so a
//! save/load round trip reproduces every bit, including signed zeros and
//! infinities.

use super::{LinearReparam, NoisyMlp, SplineModel};
use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::regops::RegularizerSpec;
use serde::{Deserialize, Serialize};

/// One named parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    /// Hex-encoded bit patterns, row-major.
    pub data: Vec<String>,
}

impl NamedArray {
    pub fn new(name: &str, shape: Vec<usize>, values: &[f64]) -> Self {
        NamedArray { name: name.to_string(), shape, data: values.iter().map(|v| format!("{:016x}", v.to_bits())).collect() }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        self.data
            .iter()
            .map(|s| {
                u64::from_str_radix(s, 16)
                    .map(f64::from_bits)
                    .map_err(|_| Error::InvalidArgument(format!("bad hex float `{s}` in `{}`", self.name)))
            })
            .collect()
    }
}

/// Serializable snapshot of a model and the mechanism that governs its regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub regularizer: RegularizerSpec,
    pub params: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("checkpoint json: {e}")))
    }

    fn get(&self, name: &str) -> Result<&NamedArray> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("checkpoint has no `{name}`")))
    }

    fn matrix(&self, name: &str) -> Result<Matrix> {
        let a = self.get(name)?;
        if a.shape.len() != 2 {
            return Err(Error::Dimension(format!("`{name}` is not two-dimensional")));
        }
        Matrix::from_vec(a.shape[0], a.shape[1], a.values()?)
    }

    pub fn from_mlp(m: &NoisyMlp, regularizer: RegularizerSpec) -> Self {
        let mut params: Vec<NamedArray> = m
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| NamedArray::new(&format!("layer{l}.weight"), vec![w.rows, w.cols], &w.data))
            .collect();
        params.push(NamedArray::new("log_sigma", vec![m.log_sigma.len()], &m.log_sigma));
        params.push(NamedArray::new("head.weight", vec![m.head_w.rows, m.head_w.cols], &m.head_w.data));
        params.push(NamedArray::new("head.bias", vec![m.head_b.len()], &m.head_b));
        Checkpoint { regularizer, params }
    }

    pub fn to_mlp(&self) -> Result<NoisyMlp> {
        let log_sigma = self.get("log_sigma")?.values()?;
        let weights = (0..log_sigma.len()).map(|l| self.matrix(&format!("layer{l}.weight"))).collect::<Result<_>>()?;
        Ok(NoisyMlp { weights, log_sigma, head_w: self.matrix("head.weight")?, head_b: self.get("head.bias")?.values()? })
    }

    pub fn from_linear(m: &LinearReparam) -> Self {
        let mut params = vec![NamedArray::new("rho", vec![1], &[m.rho]), NamedArray::new("theta", vec![m.dim()], &m.theta)];
        if let Some(b) = m.bias {
            params.push(NamedArray::new("bias", vec![1], &[b]));
        }
        Checkpoint { regularizer: RegularizerSpec::L2Reparam, params }
    }

    pub fn to_linear(&self) -> Result<LinearReparam> {
        let bias = match self.get("bias") {
            Ok(a) => Some(a.values()?[0]),
            Err(_) => None,
        };
        Ok(LinearReparam { rho: self.get("rho")?.values()?[0], theta: self.get("theta")?.values()?, bias })
    }

    pub fn from_spline(m: &SplineModel) -> Self {
        Checkpoint {
            regularizer: RegularizerSpec::DerivNormProjection,
            params: vec![
                NamedArray::new("beta", vec![m.n_basis()], &m.beta),
                NamedArray::new("n_knots", vec![1], &[m.n_knots as f64]),
            ],
        }
    }

    pub fn to_spline(&self) -> Result<SplineModel> {
        let mut m = SplineModel::new(self.get("n_knots")?.values()?[0] as usize)?;
        m.beta = self.get("beta")?.values()?;
        Ok(m)
    }
}
