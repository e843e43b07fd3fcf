//! Tidy CSV plot data: one row per (experiment, kernel, dimension, seed,
//! metric, value); KDE curves as (grid, density) rows. Emission is
//! deterministic, so re-emitting the same result is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiments::appendix_b::AppendixBReport;
use crate::experiments::counterexample::CounterexampleReport;
use crate::report::RunResult;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Benchmark/sweep metrics, one value per row.
pub fn emit_plot_data(result: &RunResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let experiment = serde_json::to_value(result.config.experiment)?
        .as_str()
        .expect("experiment serializes to a string")
        .to_string();
    let mut csv = String::from("experiment,kernel,dimension,seed,metric,value\n");
    for report in result.runs.values() {
        let mut row = |metric: &str, value: f64| {
            let _ = writeln!(
                csv,
                "{experiment},{},{},{},{metric},{value}",
                report.kernel, report.dimension, report.seed
            );
        };
        for (name, value) in &report.diagnostics.iact {
            row(&format!("iact_{name}"), *value);
        }
        row("rmsjd", report.diagnostics.rmsjd);
        row("acceptance_rate", report.diagnostics.acceptance_rate);
        for (name, value) in &report.diagnostics.mean_estimate {
            row(&format!("mean_{name}"), *value);
        }
        for (name, value) in &report.diagnostics.half_ci {
            row(&format!("half_ci_{name}"), *value);
        }
        if let Some(tries) = report.diagnostics.mean_shrink_tries {
            row("mean_shrink_tries", tries);
        }
        if let Some(parameter) = report.tuned_parameter {
            row("tuned_parameter", parameter);
        }
    }
    let path = out_dir.join("metrics.csv");
    write_file(&path, &csv)?;
    Ok(vec![path])
}

/// KDE curves and KS statistics of the one-step marginal comparison.
pub fn emit_counterexample_data(
    report: &CounterexampleReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut kde = String::from("coordinate,law,grid,density\n");
    for c in &report.per_coordinate {
        for (law, curve) in [
            ("target", &c.kde_target),
            ("naive_reprojection", &c.kde_naive),
            ("reprojection", &c.kde_reprojected),
        ] {
            for (g, d) in report.grid.iter().zip(curve) {
                let _ = writeln!(kde, "{},{law},{g},{d}", c.coordinate);
            }
        }
    }
    let mut ks = String::from("coordinate,ks_naive_vs_target,ks_reprojected_vs_target,threshold_1pct\n");
    for c in &report.per_coordinate {
        let _ = writeln!(
            ks,
            "{},{},{},{}",
            c.coordinate, c.ks_naive_vs_target, c.ks_reprojected_vs_target, report.ks_threshold_1pct
        );
    }
    let kde_path = out_dir.join("counterexample_kde.csv");
    let ks_path = out_dir.join("counterexample_ks.csv");
    write_file(&kde_path, &kde)?;
    write_file(&ks_path, &ks)?;
    Ok(vec![kde_path, ks_path])
}

/// The four conditional probability estimates.
pub fn emit_appendix_b_data(report: &AppendixBReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut csv = String::from("chain,conditioning,value,standard_error\n");
    for (chain, pair) in [("random_walk", &report.random_walk), ("pcn", &report.pcn)] {
        let _ = writeln!(
            csv,
            "{chain},one_step,{},{}",
            pair[0].value, pair[0].standard_error
        );
        let _ = writeln!(
            csv,
            "{chain},two_step,{},{}",
            pair[1].value, pair[1].standard_error
        );
    }
    let path = out_dir.join("appendix_b.csv");
    write_file(&path, &csv)?;
    Ok(vec![path])
}
