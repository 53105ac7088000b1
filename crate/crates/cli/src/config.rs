//! Key-value experiment configuration.
//!
//! One `key = value` pair per line, `#` starts a comment. Every key is checked
//! against the schema of the selected experiment, and errors carry the line
//! they came from. Command-line values are applied after the file and win.

use crate::error::{CliError, Origin, Result};
use clap::ValueEnum;
use std::path::Path;
use std::str::FromStr;
use xreg_core::experiments::{AugmentConfig, GrowthConfig, L1Config, L2Config, MlpConfig, SplineConfig, SweepParam};
use xreg_core::models::McSpace;
use xreg_core::optim::{OptimizerKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    L2,
    L1,
    Spline,
    NoiseMlp,
    Calibrate,
    Growth,
    Augment,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::L2 => "l2",
            Experiment::L1 => "l1",
            Experiment::Spline => "spline",
            Experiment::NoiseMlp => "noise-mlp",
            Experiment::Calibrate => "calibrate",
            Experiment::Growth => "growth",
            Experiment::Augment => "augment",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One `key = value` setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl Entry {
    pub fn flag(key: &str, value: impl Into<String>) -> Self {
        Entry { key: key.to_string(), value: value.into(), origin: Origin::Flag }
    }

    fn parse<T: FromStr>(&self) -> Result<T> {
        self.value
            .parse()
            .map_err(|_| CliError::config(self.origin, format!("`{}`: cannot parse `{}`", self.key, self.value)))
    }

    fn fail(&self, message: impl std::fmt::Display) -> CliError {
        CliError::config(self.origin, format!("`{}`: {message}", self.key))
    }

    fn list<T: FromStr>(&self) -> Result<Vec<T>> {
        self.value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| self.fail(format!("cannot parse list item `{}`", s.trim()))))
            .collect()
    }

    fn triple(&self) -> Result<(f64, f64, f64)> {
        match self.list::<f64>()?.as_slice() {
            [a, b, c] => Ok((*a, *b, *c)),
            _ => Err(self.fail("expected three comma-separated fractions")),
        }
    }

    fn optimizer(&self) -> Result<OptimizerKind> {
        let v = self.value.as_str();
        match v {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::adam()),
            "momentum" => Ok(OptimizerKind::Momentum { mu: 0.9 }),
            _ => match v.strip_prefix("momentum:").map(str::parse::<f64>) {
                Some(Ok(mu)) if (0.0..1.0).contains(&mu) => Ok(OptimizerKind::Momentum { mu }),
                _ => Err(self.fail(format!("expected sgd, adam, momentum or momentum:<mu>, got `{v}`"))),
            },
        }
    }

    fn batch(&self) -> Result<usize> {
        if self.value == "full" {
            Ok(usize::MAX)
        } else {
            self.parse()
        }
    }
}

/// Parses config text into entries, rejecting malformed lines and repeated keys.
pub fn parse_text(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::config(origin, format!("expected `key = value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(CliError::config(origin, format!("expected `key = value`, got `{line}`")));
        }
        if let Some(prev) = out.iter().find(|e| e.key == k) {
            return Err(CliError::config(origin, format!("`{k}` already set on {}", prev.origin)));
        }
        out.push(Entry { key: k.to_string(), value: v.to_string(), origin });
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_text(&text)
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    L2(L2Config),
    L1(L1Config),
    Spline(SplineConfig),
    NoiseMlp(MlpConfig),
    Calibrate(MlpConfig),
    Growth(GrowthConfig),
    Augment(AugmentConfig),
    Sweep { base: MlpConfig, param: SweepParam, values: Vec<f64> },
}

impl Spec {
    fn defaults(e: Experiment) -> Spec {
        match e {
            Experiment::L2 => Spec::L2(L2Config::default()),
            Experiment::L1 => Spec::L1(L1Config::default()),
            Experiment::Spline => Spec::Spline(SplineConfig::default()),
            Experiment::NoiseMlp => Spec::NoiseMlp(MlpConfig::default()),
            Experiment::Calibrate => Spec::Calibrate(MlpConfig::default()),
            Experiment::Growth => Spec::Growth(GrowthConfig::default()),
            Experiment::Augment => Spec::Augment(AugmentConfig::default()),
            Experiment::Sweep => Spec::Sweep { base: MlpConfig::default(), param: SweepParam::McSamples, values: Vec::new() },
        }
    }

    pub fn train_mut(&mut self) -> &mut TrainConfig {
        match self {
            Spec::L2(c) => &mut c.train,
            Spec::L1(c) => &mut c.train,
            Spec::Spline(c) => &mut c.train,
            Spec::NoiseMlp(c) | Spec::Calibrate(c) | Spec::Sweep { base: c, .. } => &mut c.train,
            Spec::Growth(c) => &mut c.mlp.train,
            Spec::Augment(c) => &mut c.train,
        }
    }

    /// JSON echo of the settings, used for hashing and in summaries.
    pub fn to_json(&self) -> serde_json::Value {
        let v = |r: std::result::Result<serde_json::Value, serde_json::Error>| r.expect("config serializes");
        match self {
            Spec::L2(c) => v(serde_json::to_value(c)),
            Spec::L1(c) => v(serde_json::to_value(c)),
            Spec::Spline(c) => v(serde_json::to_value(c)),
            Spec::NoiseMlp(c) | Spec::Calibrate(c) => v(serde_json::to_value(c)),
            Spec::Growth(c) => v(serde_json::to_value(c)),
            Spec::Augment(c) => v(serde_json::to_value(c)),
            Spec::Sweep { base, param, values } => {
                serde_json::json!({ "base": v(serde_json::to_value(base)), "param": param.name(), "values": values })
            }
        }
    }
}

/// A resolved `run` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub experiment: Experiment,
    pub spec: Spec,
    pub seed: u64,
    pub n_seeds: usize,
    /// Write λ-grid traces and apply the headline comparison.
    pub oracle: bool,
    pub out: String,
    pub format: Format,
}

impl Plan {
    /// Resolves `entries` (file first, then flags) on top of the experiment defaults.
    pub fn resolve(experiment: Experiment, entries: &[Entry]) -> Result<Plan> {
        let mut spec = Spec::defaults(experiment);
        let mut seed = None;
        let mut n_seeds = 1;
        let mut oracle = true;
        let mut out = String::from("runs");
        let mut format = Format::Csv;
        let mut sweep_values = None;
        for e in entries {
            match e.key.as_str() {
                "experiment" => {
                    let named = Experiment::from_str(&e.value, true).map_err(|_| e.fail(format!("unknown experiment `{}`", e.value)))?;
                    if named != experiment {
                        return Err(e.fail(format!("config is for `{}` but `{}` was requested", named.name(), experiment.name())));
                    }
                }
                "seed" => seed = Some(e.parse::<u64>()?),
                "n_seeds" => {
                    n_seeds = e.parse()?;
                    if n_seeds == 0 {
                        return Err(e.fail("must be at least 1"));
                    }
                }
                "oracle" => oracle = e.parse()?,
                "out" => out = e.value.clone(),
                "format" => format = Format::from_str(&e.value, true).map_err(|_| e.fail("expected csv or json"))?,
                "values" if experiment == Experiment::Sweep => sweep_values = Some(e.list::<f64>()?),
                _ => {
                    if !apply(&mut spec, e)? {
                        return Err(e.fail(format!("unknown key for experiment `{}`", experiment.name())));
                    }
                }
            }
        }
        let seed = seed.ok_or_else(|| CliError::config(Origin::Resolved, "a seed is required (`seed = N` or --seed N)"))?;
        if let Spec::Sweep { values, .. } = &mut spec {
            *values = sweep_values.ok_or_else(|| CliError::config(Origin::Resolved, "sweep needs `values` (or --values)"))?;
            if values.is_empty() {
                return Err(CliError::config(Origin::Resolved, "sweep needs at least one value"));
            }
        }
        let plan = Plan { experiment, spec, seed, n_seeds, oracle, out, format };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<()> {
        let cfg = |e: xreg_core::Error| CliError::config(Origin::Resolved, e.to_string());
        let mut spec = self.spec.clone();
        spec.train_mut().validate().map_err(cfg)?;
        match &self.spec {
            Spec::L1(c) if !Path::new(&c.csv).is_file() => {
                return Err(CliError::config(Origin::Resolved, format!("csv file `{}` does not exist", c.csv)));
            }
            Spec::Sweep { base, param, values } => {
                for v in values {
                    xreg_core::experiments::sweep_config(base, *param, *v).map_err(cfg)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Seeds run by this plan.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.seed + i).collect()
    }
}

fn apply(spec: &mut Spec, e: &Entry) -> Result<bool> {
    let handled = match spec {
        Spec::L2(c) => apply_l2(c, e)?,
        Spec::L1(c) => apply_l1(c, e)?,
        Spec::Spline(c) => apply_spline(c, e)?,
        Spec::NoiseMlp(c) | Spec::Calibrate(c) => apply_mlp(c, e)?,
        Spec::Growth(c) => apply_growth(c, e)?,
        Spec::Augment(c) => apply_augment(c, e)?,
        Spec::Sweep { base, param, .. } => {
            if e.key == "param" {
                *param = e.value.parse().map_err(|_| e.fail("expected mc_samples, reg_interval or reg_fraction"))?;
                true
            } else {
                apply_mlp(base, e)?
            }
        }
    };
    if handled {
        return Ok(true);
    }
    apply_train(spec.train_mut(), e)
}

fn apply_train(t: &mut TrainConfig, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "lr_theta" => t.lr_theta = e.parse()?,
        "lr_rho" => t.lr_rho = e.parse()?,
        "reg_interval" => t.reg_interval = e.parse()?,
        "mc_samples" => t.mc_samples = e.parse()?,
        "epochs" => t.epochs = e.parse()?,
        "batch_size" => t.batch_size = e.batch()?,
        "optimizer" => t.optimizer = e.optimizer()?,
        "rho_optimizer" => t.rho_optimizer = e.optimizer()?,
        "reg_start_step" => t.reg_start_step = e.parse()?,
        "rho_init" => t.rho_init = e.parse()?,
        "learn_rho" => t.learn_rho = e.parse()?,
        "noise" => t.noise = e.parse()?,
        "mc_space" => {
            t.mc_space = match e.value.as_str() {
                "probability" => McSpace::Probability,
                "logit" => McSpace::Logit,
                _ => return Err(e.fail("expected probability or logit")),
            }
        }
        "alpha_max" => t.alpha_max = e.parse()?,
        "test_time_augment" => t.test_time_augment = e.parse()?,
        "eval_every" => t.eval_every = e.parse()?,
        "abort_loss" => t.abort_loss = e.parse()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_l2(c: &mut L2Config, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "n_base" => c.n_base = e.parse()?,
        "n_total" => c.n_total = e.parse()?,
        "noise_sd" => c.noise_sd = e.parse()?,
        "n_samples" => c.n_samples = e.parse()?,
        "fractions" => c.fractions = e.triple()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_l1(c: &mut L1Config, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "csv" => c.csv = e.value.clone(),
        "target_column" => c.target_column = e.value.clone(),
        "fractions" => c.fractions = e.triple()?,
        "init_scale" => c.init_scale = e.parse()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_spline(c: &mut SplineConfig, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "n_points" => c.n_points = e.parse()?,
        "n_knots" => c.n_knots = e.parse()?,
        "fractions" => c.fractions = e.triple()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_mlp(c: &mut MlpConfig, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "n_classes" => c.n_classes = e.parse()?,
        "n_samples" => c.n_samples = e.parse()?,
        "sep" => c.sep = e.parse()?,
        "label_noise" => c.label_noise = e.parse()?,
        "fractions" => c.fractions = e.triple()?,
        "hidden" => c.hidden = e.list()?,
        "eval_samples" => c.eval_samples = e.parse()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_growth(c: &mut GrowthConfig, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "small_fraction" => c.small_fraction = e.parse()?,
        "transition_epoch" => c.transition_epoch = e.parse()?,
        "window" => c.window = e.parse()?,
        _ => return apply_mlp(&mut c.mlp, e),
    }
    Ok(true)
}

fn apply_augment(c: &mut AugmentConfig, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "n_samples" => c.n_samples = e.parse()?,
        "fractions" => c.fractions = e.triple()?,
        "hidden" => c.hidden = e.list()?,
        "alpha_init" => c.alpha_init = e.parse()?,
        "signal_length" => c.signal.length = e.parse()?,
        "n_classes" => c.signal.n_classes = e.parse()?,
        "jitter" => c.signal.jitter = e.parse()?,
        "width" => c.signal.width = e.parse()?,
        "signal_noise" => c.signal.noise_sd = e.parse()?,
        "label_noise" => c.signal.label_noise = e.parse()?,
        _ => return Ok(false),
    }
    Ok(true)
}
