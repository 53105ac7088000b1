//! `xreg`: runs cross-regularization experiments from key-value configs and
//! aggregates their summaries across seeds.
//!
//! Exit status is 0 when every run completed and passed its check, 1 when a run
//! failed, aborted or missed its check, and 2 for invalid input.

mod artifacts;
mod config;
mod error;
mod summarize;

use artifacts::RunId;
use clap::{Args, Parser, Subcommand};
use config::{Entry, Experiment, Format, Plan, Spec};
use error::{CliError, Result};
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;
use xreg_core::experiments::{self as ex, NoiseMode, Outcome};

#[derive(Parser)]
#[command(name = "xreg", version, about = "Cross-regularization experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment for one or more seeds and write its artifacts.
    Run(RunArgs),
    /// Aggregate the run summaries in DIR into mean, stddev and count per metric.
    Summarize { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `runs`).
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Swept hyperparameter: mc_samples, reg_interval or reg_fraction.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Extra `key=value` setting, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Summarize { dir } => summarize::run(&dir).map(|csv| {
            print!("{csv}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn entries(args: &RunArgs) -> Result<Vec<Entry>> {
    let mut out = match &args.config {
        Some(p) => config::read_file(p)?,
        None => Vec::new(),
    };
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::config(error::Origin::Flag, format!("--set expects KEY=VALUE, got `{s}`")))?;
        out.push(Entry::flag(k.trim(), v.trim()));
    }
    let flags = [
        ("seed", args.seed.map(|s| s.to_string())),
        ("out", args.out.clone()),
        ("format", args.format.map(|f| if f == Format::Csv { "csv".into() } else { "json".into() })),
        ("param", args.param.clone()),
        ("values", args.values.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            out.push(Entry::flag(k, v));
        }
    }
    Ok(out)
}

fn workers() -> Result<Option<usize>> {
    match std::env::var("XREG_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Workers(v)),
        },
    }
}

fn run_one(spec: &Spec, id: &RunId) -> xreg_core::Result<Outcome> {
    let mut spec = spec.clone();
    spec.train_mut().seed = id.seed;
    match spec {
        Spec::L2(c) => ex::run_l2(&c),
        Spec::L1(c) => ex::run_l1(&c),
        Spec::Spline(c) => ex::run_spline(&c),
        Spec::NoiseMlp(c) => ex::run_mlp(&c, NoiseMode::CrossReg),
        Spec::Calibrate(c) => ex::run_calibrate(&c),
        Spec::Growth(c) => ex::run_growth(&c),
        Spec::Augment(c) => ex::run_augment(&c),
        Spec::Sweep { base, param, .. } => {
            let v = id.sweep.as_ref().map_or(f64::NAN, |s| s.1);
            ex::run_sweep_point(&base, param, v)
        }
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let plan = Plan::resolve(args.experiment, &entries(&args)?)?;
    let mut ids = Vec::new();
    match &plan.spec {
        Spec::Sweep { param, values, .. } => {
            for v in values {
                ids.extend(plan.seeds().into_iter().map(|seed| RunId { seed, sweep: Some((param.name().to_string(), *v)) }));
            }
        }
        _ => ids.extend(plan.seeds().into_iter().map(|seed| RunId { seed, sweep: None })),
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let outcomes: Vec<xreg_core::Result<Outcome>> = pool.install(|| ids.par_iter().map(|id| run_one(&plan.spec, id)).collect());

    let name = plan.experiment.name();
    let mut all_ok = true;
    let mut sweep_rows: Vec<(f64, f64)> = Vec::new();
    for (id, result) in ids.iter().zip(outcomes) {
        let prefix = id.prefix(name);
        let o = match result {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{prefix}: error: {e}");
                all_ok = false;
                continue;
            }
        };
        artifacts::write_outcome(&plan, id, &o)?;
        let aborted = artifacts::aborted(&o);
        let status = match (aborted, artifacts::check(&plan, &o)) {
            (true, _) => "ABORTED",
            (false, Some(true)) => "PASS",
            (false, Some(false)) => "FAIL",
            (false, None) => "done",
        };
        all_ok &= matches!(status, "PASS" | "done");
        let metrics: Vec<String> = o.summary.metrics.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
        println!("{prefix}: {status} {}", metrics.join(" "));
        if let Some((_, v)) = &id.sweep {
            sweep_rows.push((*v, o.summary.get("test_accuracy")));
        }
    }
    if let Spec::Sweep { param, values, .. } = &plan.spec {
        println!("{},mean_test_accuracy,runs", param.name());
        for v in values {
            let acc: Vec<f64> = sweep_rows.iter().filter(|(x, _)| x == v).map(|(_, a)| *a).collect();
            if !acc.is_empty() {
                println!("{v},{:.4},{}", summarize::mean_std(&acc).0, acc.len());
            }
        }
    }
    println!("artifacts in {} (config hash {})", plan.out, artifacts::config_hash(&plan));
    Ok(all_ok)
}
