//! Artifact files of a run. Each one carries the config hash and the seed, and
//! is written to a temporary name first and then renamed into place.

use crate::config::{Format, Plan};
use crate::error::{CliError, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use xreg_core::experiments::Outcome;

/// Hex SHA-256 of the resolved settings with the seed cleared, so every seed
/// of one configuration shares a hash.
pub fn config_hash(plan: &Plan) -> String {
    let mut spec = plan.spec.clone();
    spec.train_mut().seed = 0;
    let canonical = json!({ "experiment": plan.experiment.name(), "config": spec.to_json() });
    Sha256::digest(canonical.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Identifies one run inside the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunId {
    pub seed: u64,
    /// `(parameter, value)` of a sweep point.
    pub sweep: Option<(String, f64)>,
}

impl RunId {
    pub fn prefix(&self, experiment: &str) -> String {
        match &self.sweep {
            Some((p, v)) => format!("{experiment}_{p}_{v}_s{}", self.seed),
            None => format!("{experiment}_s{}", self.seed),
        }
    }
}

/// Whether the run stopped early.
pub fn aborted(o: &Outcome) -> bool {
    o.records.iter().any(|(_, r)| r.aborted.is_some()) || o.summary.metrics.contains_key("aborted")
}

/// Headline check result, honouring the oracle toggle for the grid comparisons.
pub fn check(plan: &Plan, o: &Outcome) -> Option<bool> {
    if plan.oracle {
        o.passed
    } else {
        o.grids.is_empty().then_some(o.passed).flatten()
    }
}

fn csv_with_header(hash: &str, seed: u64, body: &str) -> String {
    format!("# config_hash={hash} seed={seed}\n{body}")
}

/// Writes every artifact of `o` and returns the paths, summary first.
pub fn write_outcome(plan: &Plan, id: &RunId, o: &Outcome) -> Result<Vec<PathBuf>> {
    let dir = Path::new(&plan.out);
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let hash = config_hash(plan);
    let prefix = id.prefix(plan.experiment.name());
    let seed = id.seed;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, &contents)?;
        written.push(p);
        Ok(())
    };

    let mut spec_json = plan.spec.to_json();
    set_seed(&mut spec_json, seed);
    let summary = json!({
        "config_hash": hash,
        "seed": seed,
        "experiment": plan.experiment.name(),
        "sweep": id.sweep.as_ref().map(|(p, v)| json!({ "param": p, "value": v })),
        "passed": check(plan, o),
        "aborted": aborted(o),
        "metrics": o.summary.metrics,
        "config": spec_json,
    });
    put(format!("{prefix}_summary.json"), pretty(&summary))?;

    for (name, rec) in &o.records {
        match plan.format {
            Format::Csv => put(format!("{prefix}_trace_{name}.csv"), csv_with_header(&hash, seed, &rec.to_csv()))?,
            Format::Json => {
                let trace: Value = serde_json::from_str(&rec.to_json()).expect("trace json parses");
                put(format!("{prefix}_trace_{name}.json"), pretty(&json!({ "config_hash": hash, "seed": seed, "trace": trace })))?
            }
        }
    }
    if plan.oracle {
        for (name, g) in &o.grids {
            put(format!("{prefix}_grid_{name}.csv"), csv_with_header(&hash, seed, &g.to_csv()))?;
        }
    }
    for (name, c) in &o.calibration {
        put(format!("{prefix}_calibration_{name}.csv"), csv_with_header(&hash, seed, &c.to_csv()))?;
    }
    if let Some(ck) = &o.checkpoint {
        let v: Value = serde_json::from_str(&ck.to_json()).expect("checkpoint json parses");
        put(format!("{prefix}_checkpoint.json"), pretty(&json!({ "config_hash": hash, "seed": seed, "checkpoint": v })))?;
    }
    Ok(written)
}

fn set_seed(v: &mut Value, seed: u64) {
    if let Some(obj) = v.as_object_mut() {
        for (k, child) in obj.iter_mut() {
            if k == "seed" {
                *child = json!(seed);
            } else {
                set_seed(child, seed);
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
