//! Grid search over graph neighbor counts and regularization weight,
//! repeated over seeds. Runs are independent and execute in parallel; the
//! tables are sorted afterwards so output does not depend on scheduling.

use std::path::Path;

use coin_core::persist::write_json;
use coin_core::pipeline::{run_experiment, PipelineConfig};
use coin_core::MetricsReport;
use rayon::prelude::*;

use crate::config::echo_config;
use crate::error::CliError;
use crate::files::{METRICS, SWEEP_RUNS, SWEEP_SUMMARY};

/// One grid point at one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRun {
    pub n_pos: usize,
    pub n_neg: usize,
    pub lambda: f64,
    pub seed: u64,
    pub outcome: Result<MetricsReport, String>,
}

/// Aggregate of one grid point over its seeds. Failed runs are counted but
/// excluded from the statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n_pos: usize,
    pub n_neg: usize,
    pub lambda: f64,
    pub runs: usize,
    pub failed: usize,
    pub accuracy: (f64, f64),
    pub auc: (f64, f64),
    pub margin_ratio: (f64, f64),
}

/// Config of one grid point. `(0, 0)` means no graph, which also switches
/// augmentation off: that point is the unregularized baseline.
pub fn grid_config(base: &PipelineConfig, n_pos: usize, n_neg: usize, lambda: f64, seed: u64) -> PipelineConfig {
    let mut config = base.with_seed(seed);
    config.graph.n_pos = n_pos;
    config.graph.n_neg = n_neg;
    config.train.lambda = lambda;
    if n_pos == 0 && n_neg == 0 {
        config.augment.n_pos = 0;
        config.augment.n_neg = 0;
    }
    config
}

fn run_dir_name(n_pos: usize, n_neg: usize, lambda: f64, seed: u64) -> String {
    format!("p{n_pos}_n{n_neg}_l{lambda}_s{seed}")
}

pub fn sweep(base: &PipelineConfig, out: &Path) -> Result<(Vec<SweepRun>, Vec<SweepRow>), CliError> {
    let grid = &base.sweep;
    if grid.n_pos.is_empty() || grid.n_neg.is_empty() || grid.lambda.is_empty() || grid.seeds.is_empty() {
        return Err(CliError::Usage("sweep grid must be non-empty in every axis".into()));
    }
    if grid.lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(CliError::Usage("sweep lambdas must be finite and >= 0".into()));
    }
    let mut points = Vec::new();
    for &p in &grid.n_pos {
        for &n in &grid.n_neg {
            for &l in &grid.lambda {
                for &s in &grid.seeds {
                    points.push((p, n, l, s));
                }
            }
        }
    }

    let mut runs: Vec<SweepRun> = points
        .par_iter()
        .map(|&(n_pos, n_neg, lambda, seed)| {
            let config = grid_config(base, n_pos, n_neg, lambda, seed);
            let dir = out.join("runs").join(run_dir_name(n_pos, n_neg, lambda, seed));
            let outcome = run_one(&config, &dir);
            SweepRun {
                n_pos,
                n_neg,
                lambda,
                seed,
                outcome,
            }
        })
        .collect();
    runs.sort_by(|a, b| {
        (a.n_pos, a.n_neg)
            .cmp(&(b.n_pos, b.n_neg))
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.seed.cmp(&b.seed))
    });
    let rows = summarize(&runs);
    write_runs(&runs, &out.join(SWEEP_RUNS))?;
    write_summary(&rows, &out.join(SWEEP_SUMMARY))?;
    Ok((runs, rows))
}

fn run_one(config: &PipelineConfig, dir: &Path) -> Result<MetricsReport, String> {
    echo_config(config, dir).map_err(|e| e.to_string())?;
    let outcome = run_experiment(config).map_err(|e| e.to_string())?;
    write_json(dir.join(METRICS), &outcome.report).map_err(|e| e.to_string())?;
    Ok(outcome.report)
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups runs (already sorted) by grid point.
pub fn summarize(runs: &[SweepRun]) -> Vec<SweepRow> {
    runs.chunk_by(|a, b| a.n_pos == b.n_pos && a.n_neg == b.n_neg && a.lambda == b.lambda)
        .map(|group| {
            let ok: Vec<&MetricsReport> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let stat = |f: &dyn Fn(&MetricsReport) -> Option<f64>| {
                mean_std(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            SweepRow {
                n_pos: group[0].n_pos,
                n_neg: group[0].n_neg,
                lambda: group[0].lambda,
                runs: group.len(),
                failed: group.len() - ok.len(),
                accuracy: stat(&|r| Some(r.accuracy)),
                auc: stat(&|r| Some(r.auc)),
                margin_ratio: stat(&|r| r.margin_ratio),
            }
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_runs(runs: &[SweepRun], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut put = |rec: Vec<String>| w.write_record(rec).map_err(|e| csv_error(path, e));
    put([
        "n_pos",
        "n_neg",
        "lambda",
        "seed",
        "accuracy",
        "auc",
        "margin_ratio",
        "status",
    ]
    .map(String::from)
    .to_vec())?;
    for r in runs {
        let (acc, auc, ratio, status) = match &r.outcome {
            Ok(m) => (Some(m.accuracy), Some(m.auc), m.margin_ratio, "ok".to_string()),
            Err(e) => (None, None, None, format!("failed: {e}")),
        };
        put(vec![
            r.n_pos.to_string(),
            r.n_neg.to_string(),
            r.lambda.to_string(),
            r.seed.to_string(),
            opt(acc),
            opt(auc),
            opt(ratio),
            status,
        ])?;
    }
    w.flush()
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_summary(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "n_pos",
        "n_neg",
        "lambda",
        "runs",
        "failed",
        "accuracy_mean",
        "accuracy_std",
        "auc_mean",
        "auc_std",
        "margin_ratio_mean",
        "margin_ratio_std",
    ])
    .map_err(|e| csv_error(path, e))?;
    let num = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    for r in rows {
        w.write_record([
            r.n_pos.to_string(),
            r.n_neg.to_string(),
            r.lambda.to_string(),
            r.runs.to_string(),
            r.failed.to_string(),
            num(r.accuracy.0),
            num(r.accuracy.1),
            num(r.auc.0),
            num(r.auc.1),
            num(r.margin_ratio.0),
            num(r.margin_ratio.1),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush()
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
