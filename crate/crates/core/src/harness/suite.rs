use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{read_metrics, write_metrics, MetricsRow};
use super::run::run_experiment;
use super::HarnessError;
use crate::stats::{iqr, mean, median, ols_slope};

/// Final-window statistics of one algorithm across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub seeds: usize,
    pub final_window: usize,
    /// Mean, median and IQR across seeds of each seed's final-window median
    /// total delay.
    pub mean_delay_s: f64,
    pub median_delay_s: f64,
    pub iqr_delay_s: f64,
    /// Least-squares slope of the across-seed median delay curve per iteration.
    pub slope: f64,
    pub slope_ci_low: f64,
    pub slope_ci_high: f64,
}

/// Per-iteration median of `total_delay_s` across seeds.
pub fn median_curve(rows: &[MetricsRow]) -> Vec<(usize, f64)> {
    let mut by_iter: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_iter.entry(r.iteration).or_default().push(r.total_delay_s);
    }
    by_iter.into_iter().map(|(i, v)| (i, median(&v))).collect()
}

/// Median of the last `window` iterations of every seed.
pub fn final_window_medians(rows: &[MetricsRow], window: usize) -> BTreeMap<u64, f64> {
    let mut by_seed: BTreeMap<u64, Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        by_seed.entry(r.seed).or_default().push(r);
    }
    by_seed
        .into_iter()
        .map(|(seed, mut rs)| {
            rs.sort_by_key(|r| r.iteration);
            let tail: Vec<f64> = rs.iter().rev().take(window).map(|r| r.total_delay_s).collect();
            (seed, median(&tail))
        })
        .collect()
}

pub fn summarize(algorithm: &str, rows: &[MetricsRow], window: usize) -> SummaryRow {
    let per_seed: Vec<f64> = final_window_medians(rows, window).into_values().collect();
    let curve = median_curve(rows);
    let x: Vec<f64> = curve.iter().map(|&(i, _)| i as f64).collect();
    let y: Vec<f64> = curve.iter().map(|&(_, d)| d).collect();
    let fit = ols_slope(&x, &y, 0.95);
    SummaryRow {
        algorithm: algorithm.to_string(),
        seeds: per_seed.len(),
        final_window: window,
        mean_delay_s: mean(&per_seed),
        median_delay_s: median(&per_seed),
        iqr_delay_s: iqr(&per_seed),
        slope: fit.map_or(f64::NAN, |f| f.slope),
        slope_ci_low: fit.map_or(f64::NAN, |f| f.ci_low),
        slope_ci_high: fit.map_or(f64::NAN, |f| f.ci_high),
    }
}

pub fn write_summary(path: &Path, summary: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    if summary.is_empty() {
        w.write_record([
            "algorithm",
            "seeds",
            "final_window",
            "mean_delay_s",
            "median_delay_s",
            "iqr_delay_s",
            "slope",
            "slope_ci_low",
            "slope_ci_high",
        ])?;
    }
    for row in summary {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text comparison table.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>5} {:>12} {:>12} {:>12} {:>24}\n",
        "algorithm", "seeds", "mean [s]", "median [s]", "IQR [s]", "slope 95% CI"
    ));
    for r in summary {
        out.push_str(&format!(
            "{:<12} {:>5} {:>12.6} {:>12.6} {:>12.6} [{:>10.3e}, {:>10.3e}]\n",
            r.algorithm, r.seeds, r.mean_delay_s, r.median_delay_s, r.iqr_delay_s, r.slope_ci_low, r.slope_ci_high
        ));
    }
    out
}

/// Runs every configuration over its seeds, writes per-seed and merged CSVs
/// plus `summary.csv`, and returns the summary.
pub fn run_suite(configs: &[ExperimentConfig]) -> Result<Vec<SummaryRow>, HarnessError> {
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = configs.iter().find(|c| c.sim != first.sim) {
        return Err(HarnessError::MismatchedSuite(other.algorithm.name().to_string()));
    }
    let out = &first.output;
    std::fs::create_dir_all(out)?;
    let mut summary = Vec::new();
    for cfg in configs {
        let cfg = ExperimentConfig {
            output: out.clone(),
            ..cfg.clone()
        };
        let mut rows = Vec::new();
        for seed in cfg.seed_list() {
            rows.extend(run_experiment(&cfg, seed)?);
        }
        write_metrics(&out.join(format!("{}.csv", cfg.algorithm.name())), &rows)?;
        summary.push(summarize(cfg.algorithm.name(), &rows, cfg.final_window));
    }
    write_summary(&out.join("summary.csv"), &summary)?;
    Ok(summary)
}

/// One config per algorithm listed in `cfg.algorithms`.
pub fn suite_configs(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    cfg.algorithms
        .iter()
        .map(|&algorithm| ExperimentConfig {
            algorithm,
            ..cfg.clone()
        })
        .collect()
}

/// Rebuilds the summary from the merged per-algorithm CSVs in `dir`.
pub fn report(dir: &Path, window: usize) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && name != "summary.csv" && !name.contains("_seed")
        })
        .collect();
    files.sort();
    let mut summary = Vec::new();
    for path in files {
        let rows = read_metrics(&path)?;
        let Some(first) = rows.first() else { continue };
        summary.push(summarize(&first.algorithm.clone(), &rows, window));
    }
    write_summary(&dir.join("summary.csv"), &summary)?;
    Ok(summary)
}
