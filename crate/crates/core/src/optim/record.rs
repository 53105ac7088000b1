//! Per-epoch training traces.

use super::access::AccessCounts;
use super::TrainConfig;
use serde::{Deserialize, Serialize};

/// One epoch of a trace. Metrics not evaluated in an epoch are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub reg_loss: f64,
    pub test_metric: f64,
    pub gen_gap: f64,
    pub rho: Vec<f64>,
}

/// Full trace of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<EpochRow>,
    pub config: TrainConfig,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Set when the run stopped early.
    pub aborted: Option<String>,
    pub warnings: Vec<String>,
    pub access: AccessCounts,
    /// Training forward passes and regularization forward passes (counting all K).
    pub train_forwards: usize,
    pub reg_forwards: usize,
    pub reg_steps: usize,
    pub skipped_reg_steps: usize,
}

impl RunRecord {
    pub fn new(config: &TrainConfig) -> Self {
        RunRecord {
            rows: Vec::new(),
            config: config.clone(),
            seed: config.seed,
            wall_time_s: 0.0,
            aborted: None,
            warnings: Vec::new(),
            access: AccessCounts::default(),
            train_forwards: 0,
            reg_forwards: 0,
            reg_steps: 0,
            skipped_reg_steps: 0,
        }
    }

    pub fn last(&self) -> Option<&EpochRow> {
        self.rows.last()
    }

    /// Regularization forward passes per training forward pass.
    pub fn overhead_ratio(&self) -> f64 {
        self.reg_forwards as f64 / self.train_forwards.max(1) as f64
    }

    /// `epoch,train_loss,reg_loss,test_metric,gen_gap,rho_0…` with a header.
    pub fn to_csv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.rho.len());
        let mut s = String::from("epoch,train_loss,reg_loss,test_metric,gen_gap");
        for i in 0..k {
            s.push_str(&format!(",rho_{i}"));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}", r.epoch, r.train_loss, r.reg_loss, r.test_metric, r.gen_gap));
            for v in &r.rho {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    /// JSON mirroring the CSV columns plus the config echo. Wall time is left
    /// out so identical runs serialize identically.
    pub fn to_json(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "epoch": r.epoch,
                    "train_loss": json_num(r.train_loss),
                    "reg_loss": json_num(r.reg_loss),
                    "test_metric": json_num(r.test_metric),
                    "gen_gap": json_num(r.gen_gap),
                    "rho": r.rho.iter().map(|v| json_num(*v)).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": self.seed,
            "config": self.config,
            "aborted": self.aborted,
            "warnings": self.warnings,
            "rows": rows,
        }))
        .expect("record serializes")
    }
}

// JSON has no NaN; missing metrics become null.
fn json_num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}
