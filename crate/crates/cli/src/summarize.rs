//! Aggregation of run summaries across seeds.

use crate::artifacts::write_atomic;
use crate::error::{CliError, Result};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Mean, sample standard deviation and count of one metric within one group.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub group: String,
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summary_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_summary.json")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Groups metrics by sweep point (or `all`) across every summary in `dir`.
/// Refuses directories whose summaries carry different config hashes.
pub fn summarize(dir: &Path) -> Result<Vec<Aggregate>> {
    let files = summary_files(dir)?;
    if files.is_empty() {
        return Err(CliError::Empty(dir.to_path_buf()));
    }
    let mut by_hash: BTreeMap<String, Vec<&PathBuf>> = BTreeMap::new();
    let mut values: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for f in &files {
        let bad = |m: &str| CliError::Summary { path: f.clone(), message: m.to_string() };
        let text = std::fs::read_to_string(f).map_err(|e| CliError::io(f, e))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
        let hash = v["config_hash"].as_str().ok_or_else(|| bad("missing config_hash"))?;
        by_hash.entry(hash.to_string()).or_default().push(f);
        let group = match &v["sweep"] {
            Value::Object(s) => format!("{}={}", s["param"].as_str().unwrap_or("?"), s["value"].as_f64().unwrap_or(f64::NAN)),
            _ => "all".to_string(),
        };
        let metrics = v["metrics"].as_object().ok_or_else(|| bad("missing metrics"))?;
        for (k, m) in metrics {
            let slot = values.entry((group.clone(), k.clone())).or_default();
            if let Some(x) = m.as_f64() {
                slot.push(x);
            }
        }
    }
    if by_hash.len() > 1 {
        let listing = by_hash
            .iter()
            .map(|(h, fs)| format!("  {h}: {}", fs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(CliError::MixedConfigs(listing));
    }
    Ok(values
        .into_iter()
        .map(|((group, metric), v)| {
            let (mean, stddev) = if v.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&v) };
            Aggregate { group, metric, mean, stddev, count: v.len() }
        })
        .collect())
}

/// `group,metric,mean,stddev,count` rows with a header.
pub fn to_csv(rows: &[Aggregate]) -> String {
    let mut s = String::from("group,metric,mean,stddev,count\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.group, r.metric, r.mean, r.stddev, r.count));
    }
    s
}

/// Aggregates `dir` and writes `aggregate.csv` next to the summaries.
pub fn run(dir: &Path) -> Result<String> {
    let csv = to_csv(&summarize(dir)?);
    write_atomic(&dir.join("aggregate.csv"), &csv)?;
    Ok(csv)
}
