use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn xreg(args: &[&str]) -> Output {
    xreg_env(args, &[])
}

fn xreg_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xreg"));
    c.args(args).env_remove("XREG_WORKERS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const SMALL_MLP: &[&str] = &[
    "--set", "n_samples=300",
    "--set", "epochs=3",
    "--set", "hidden=8,8",
    "--set", "batch_size=16",
    "--set", "eval_every=1",
    "--set", "reg_interval=2",
];

fn small_mlp(exp: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", exp, "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL_MLP);
    args.extend_from_slice(extra);
    xreg(&args)
}

#[test]
fn l2_run_matches_ridge_oracle() {
    let tmp = TempDir::new().unwrap();
    let o = xreg(&["run", "l2", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(tmp.path(), "l2_s1_summary.json");
    assert!(s["metrics"]["relative_gap"].as_f64().unwrap().abs() <= 0.01);
    assert_eq!(s["passed"], Value::Bool(true));
    assert_eq!(s["seed"], 1);
    assert_eq!(s["config"]["train"]["seed"], 1);
    let names: Vec<String> = files(tmp.path()).iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["l2_s1_checkpoint.json", "l2_s1_grid_ridge.csv", "l2_s1_summary.json", "l2_s1_trace_xreg.csv"]);
}

#[test]
fn artifacts_embed_hash_and_seed() {
    let tmp = TempDir::new().unwrap();
    let o = small_mlp("noise-mlp", tmp.path(), &["--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = summary(tmp.path(), "noise-mlp_s4_summary.json")["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for f in files(tmp.path()) {
        let text = std::fs::read_to_string(&f).unwrap();
        if f.extension().unwrap() == "csv" {
            assert_eq!(text.lines().next().unwrap(), format!("# config_hash={hash} seed=4"), "{}", f.display());
        } else {
            let v: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_hash"], hash.as_str());
            assert_eq!(v["seed"], 4);
        }
    }
    assert!(!files(tmp.path()).iter().any(|p| p.to_string_lossy().ends_with(".tmp")));
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = |d: &Path| {
        let mut v: Vec<String> = ["run", "noise-mlp", "--seed", "2", "--format", "json", "--set", "n_seeds=3", "--out"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.push(d.to_str().unwrap().to_string());
        v.extend(SMALL_MLP.iter().map(|s| s.to_string()));
        v
    };
    let run = |d: &Path, workers: &str| {
        let v = args(d);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        let o = xreg_env(&refs, &[("XREG_WORKERS", workers)]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run(a.path(), "1");
    run(b.path(), "3");
    let fa = files(a.path());
    assert_eq!(fa.len(), 3 * 5);
    for f in fa {
        let g = b.path().join(f.file_name().unwrap());
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(&g).unwrap(), "{}", f.display());
    }
    assert!(a.path().join("noise-mlp_s4_trace_train.json").is_file());
}

#[test]
fn config_file_errors_carry_line_numbers() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "# comment\nseed = 1\nbogus = 3\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3") && stderr(&o).contains("bogus"), "{}", stderr(&o));

    std::fs::write(&cfg, "seed = 1\nepochs = many\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("line 2") && stderr(&o).contains("epochs"), "{}", stderr(&o));

    std::fs::write(&cfg, "seed = 1\nseed = 2\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("line 2") && stderr(&o).contains("line 1"), "{}", stderr(&o));

    std::fs::write(&cfg, "seed 1\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    std::fs::write(&cfg, "experiment = spline\nseed = 1\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&cfg, "seed = 1\nreg_interval = 0\n").unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("reg_interval"), "{}", stderr(&o));
}

#[test]
fn seed_is_required() {
    let tmp = TempDir::new().unwrap();
    let o = xreg(&["run", "l2", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
    assert!(files(tmp.path()).is_empty());
}

#[test]
fn flags_override_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    let out = tmp.path().join("out");
    std::fs::write(&cfg, format!("seed = 5\nepochs = 9\nout = {}\n", tmp.path().join("ignored").display())).unwrap();
    let o = xreg(&["run", "l2", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap(), "--set", "epochs=4", "--set", "oracle=false"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out, "l2_s7_summary.json");
    assert_eq!(s["config"]["train"]["epochs"], 4);
    assert_eq!(s["passed"], Value::Null);
    assert!(!tmp.path().join("ignored").exists());
    assert!(!out.join("l2_s7_grid_ridge.csv").exists());
}

#[test]
fn failed_check_and_abort_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().to_str().unwrap();
    let o = xreg(&["run", "spline", "--seed", "1", "--out", d, "--set", "epochs=5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("spline_s1: FAIL"));
    assert_eq!(summary(tmp.path(), "spline_s1_summary.json")["passed"], Value::Bool(false));

    let o = xreg(&["run", "l2", "--seed", "1", "--out", d, "--set", "abort_loss=1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(tmp.path(), "l2_s1_summary.json")["aborted"], Value::Bool(true));
}

#[test]
fn l1_needs_existing_csv() {
    let tmp = TempDir::new().unwrap();
    let o = xreg(&["run", "l1", "--seed", "1", "--out", tmp.path().to_str().unwrap(), "--set", "csv=/nonexistent/diabetes.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));

    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/diabetes.csv");
    let csv_arg = format!("csv={}", csv.display());
    let o = xreg(&["run", "l1", "--seed", "1", "--out", tmp.path().to_str().unwrap(), "--set", &csv_arg, "--set", "epochs=20"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", stderr(&o));
    assert!(tmp.path().join("l1_s1_grid_lasso.csv").is_file());
}

#[test]
fn sweep_writes_one_trace_per_value() {
    let tmp = TempDir::new().unwrap();
    let o = small_mlp("sweep", tmp.path(), &["--seed", "1", "--param", "mc_samples", "--values", "1,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for v in ["1", "3"] {
        let s = summary(tmp.path(), &format!("sweep_mc_samples_{v}_s1_summary.json"));
        assert_eq!(s["config"]["base"]["train"]["mc_samples"], 3);
        assert_eq!(s["metrics"]["mc_samples"].as_f64().unwrap(), v.parse::<f64>().unwrap());
        assert!(tmp.path().join(format!("sweep_mc_samples_{v}_s1_trace_train.csv")).is_file());
    }
    assert!(stdout(&o).contains("mc_samples,mean_test_accuracy,runs"));
    let agg = xreg(&["summarize", tmp.path().to_str().unwrap()]);
    assert!(agg.status.success(), "{}", stderr(&agg));
    assert!(stdout(&agg).contains("mc_samples=1,test_accuracy,"));
    assert!(stdout(&agg).contains("mc_samples=3,test_accuracy,"));

    let o = small_mlp("sweep", tmp.path(), &["--seed", "1", "--param", "bogus", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = small_mlp("sweep", tmp.path(), &["--seed", "1", "--param", "reg_fraction"]);
    assert_eq!(o.status.code(), Some(2));
}

fn agg_row<'a>(csv: &'a str, metric: &str) -> Vec<&'a str> {
    csv.lines().find(|l| l.starts_with(&format!("all,{metric},"))).unwrap().split(',').collect()
}

#[test]
fn summarize_single_run_has_zero_stddev() {
    let tmp = TempDir::new().unwrap();
    let o = xreg(&["run", "l2", "--seed", "1", "--out", tmp.path().to_str().unwrap(), "--set", "epochs=50"]);
    assert!(o.status.code().is_some());
    let agg = xreg(&["summarize", tmp.path().to_str().unwrap()]);
    assert!(agg.status.success());
    let text = stdout(&agg);
    let row = agg_row(&text, "rho");
    let s = summary(tmp.path(), "l2_s1_summary.json");
    assert_eq!(row[2].parse::<f64>().unwrap(), s["metrics"]["rho"].as_f64().unwrap());
    assert_eq!(row[3], "0");
    assert_eq!(row[4], "1");
    assert_eq!(std::fs::read_to_string(tmp.path().join("aggregate.csv")).unwrap(), text);
}

#[test]
fn summarize_two_seeds_by_hand() {
    let tmp = TempDir::new().unwrap();
    let o = small_mlp("noise-mlp", tmp.path(), &["--seed", "1", "--set", "n_seeds=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = summary(tmp.path(), "noise-mlp_s1_summary.json")["metrics"]["test_accuracy"].as_f64().unwrap();
    let b = summary(tmp.path(), "noise-mlp_s2_summary.json")["metrics"]["test_accuracy"].as_f64().unwrap();
    let agg = stdout(&xreg(&["summarize", tmp.path().to_str().unwrap()]));
    let row = agg_row(&agg, "test_accuracy");
    let mean = (a + b) / 2.0;
    let sd = ((a - mean).powi(2) + (b - mean).powi(2)).sqrt();
    assert!((row[2].parse::<f64>().unwrap() - mean).abs() < 1e-12);
    assert!((row[3].parse::<f64>().unwrap() - sd).abs() < 1e-12);
    assert_eq!(row[4], "2");
}

#[test]
fn summarize_rejects_mixed_configs_and_empty_dirs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().to_str().unwrap();
    assert!(xreg(&["run", "l2", "--seed", "1", "--out", d, "--set", "epochs=20"]).status.code().is_some());
    assert!(xreg(&["run", "l2", "--seed", "2", "--out", d, "--set", "epochs=30"]).status.code().is_some());
    let o = xreg(&["summarize", d]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("l2_s1_summary.json") && err.contains("l2_s2_summary.json"), "{err}");

    let empty = TempDir::new().unwrap();
    let o = xreg(&["summarize", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no run summaries"));
}

#[test]
fn invalid_worker_count_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = xreg_env(&["run", "l2", "--seed", "1", "--out", tmp.path().to_str().unwrap()], &[("XREG_WORKERS", "0")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("XREG_WORKERS"));
}
