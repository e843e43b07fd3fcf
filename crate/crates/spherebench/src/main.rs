use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spherebench::config::{validate_config, Experiment, ExperimentConfig};
use spherebench::error::{HarnessError, Result};
use spherebench::experiments::appendix_b::run_appendix_b;
use spherebench::experiments::benchmark::{run_benchmark, run_sweep};
use spherebench::experiments::counterexample::run_counterexample;
use spherebench::experiments::stationarity::run_stationarity_suite;
use spherebench::plots::{emit_appendix_b_data, emit_counterexample_data, emit_plot_data};
use spherebench::report::RunResult;

#[derive(Parser)]
#[command(
    name = "spherebench",
    about = "Dimension-robust MCMC on spheres: benchmarks and reproductions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed (repeatable)
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// worker threads for parallel runs
    #[arg(long)]
    jobs: Option<usize>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One-step marginal comparison: target vs naive reprojection vs
    /// reprojection
    Counterexample {
        #[command(flatten)]
        common: CommonArgs,
        /// sample count (default 1e6)
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Monte Carlo probabilities showing the projected chain is not Markov
    AppendixB {
        #[command(flatten)]
        common: CommonArgs,
        /// sample count (default 1e7)
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Level-set inversion benchmark at fixed dimensions
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Efficiency-vs-dimension sweep
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// run the published full grid (d up to 640, 1e6 iterations)
        #[arg(long)]
        full_scale: bool,
    },
    /// Stationarity and reversibility checks for the reprojected kernels
    Stationarity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Parse and validate a configuration file
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-emit CSV plot data from a stored run result
    EmitPlots {
        /// run_result.json produced by benchmark or sweep
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs, default_experiment: Experiment) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => validate_config(path).map_err(HarnessError::Config)?,
        None => ExperimentConfig::defaults_for(default_experiment),
    };
    if !common.seeds.is_empty() {
        config.seeds = common.seeds.clone();
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(HarnessError::Config(violations));
    }
    Ok(config)
}

fn install_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(
    dir: &std::path::Path,
    name: &str,
    value: &T,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value)?)?;
    Ok(path)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Counterexample { common, samples } => {
            let config = load_config(&common, Experiment::Counterexample)?;
            let n = samples.unwrap_or(config.n_samples);
            let seed = *config.seeds.first().expect("validated non-empty");
            let report = run_counterexample(n, seed)?;
            let json = write_json(&config.output_dir, "counterexample_report.json", &report)?;
            let csvs = emit_counterexample_data(&report, &config.output_dir)?;
            println!("wrote {}", json.display());
            for c in csvs {
                println!("wrote {}", c.display());
            }
            for c in &report.per_coordinate {
                println!(
                    "coordinate {}: KS naive {:.5}, KS reprojected {:.5} (1% threshold {:.5})",
                    c.coordinate,
                    c.ks_naive_vs_target,
                    c.ks_reprojected_vs_target,
                    report.ks_threshold_1pct
                );
            }
        }
        Command::AppendixB { common, samples } => {
            let config = load_config(&common, Experiment::AppendixB)?;
            let n = samples.unwrap_or(10_000_000);
            let seed = *config.seeds.first().expect("validated non-empty");
            let report = run_appendix_b(n, seed)?;
            let json = write_json(&config.output_dir, "appendix_b_report.json", &report)?;
            let csvs = emit_appendix_b_data(&report, &config.output_dir)?;
            println!("wrote {}", json.display());
            for c in csvs {
                println!("wrote {}", c.display());
            }
            println!(
                "random walk: {:.4} +- {:.4} | {:.4} +- {:.4}",
                report.random_walk[0].value,
                report.random_walk[0].standard_error,
                report.random_walk[1].value,
                report.random_walk[1].standard_error
            );
            println!(
                "pCN:         {:.4} +- {:.4} | {:.4} +- {:.4}",
                report.pcn[0].value,
                report.pcn[0].standard_error,
                report.pcn[1].value,
                report.pcn[1].standard_error
            );
        }
        Command::Benchmark { common } => {
            install_pool(common.jobs)?;
            let config = load_config(&common, Experiment::BenchmarkD3)?;
            let result = run_benchmark(&config)?;
            let path = config.output_dir.join("run_result.json");
            result.write_json(&path)?;
            let csvs = emit_plot_data(&result, &config.output_dir)?;
            println!("wrote {}", path.display());
            for c in csvs {
                println!("wrote {}", c.display());
            }
            for (key, report) in &result.runs {
                println!(
                    "{key}: mean q {:.4} +- {:.4}, rmsjd {:.4}, acceptance {:.3}",
                    report.diagnostics.mean_estimate["q"],
                    report.diagnostics.half_ci["q"],
                    report.diagnostics.rmsjd,
                    report.diagnostics.acceptance_rate
                );
            }
        }
        Command::Sweep { common, full_scale } => {
            install_pool(common.jobs)?;
            let mut config = load_config(&common, Experiment::DimensionSweep)?;
            config.full_scale |= full_scale;
            let result = run_sweep(&config)?;
            let path = config.output_dir.join("run_result.json");
            result.write_json(&path)?;
            let csvs = emit_plot_data(&result, &config.output_dir)?;
            println!("wrote {}", path.display());
            for c in csvs {
                println!("wrote {}", c.display());
            }
        }
        Command::Stationarity { common } => {
            let config = load_config(&common, Experiment::StationaritySuite)?;
            let steps = config.iterations.min(200_000);
            let seed = *config.seeds.first().expect("validated non-empty");
            let report = run_stationarity_suite(steps, seed)?;
            let json = write_json(&config.output_dir, "stationarity_report.json", &report)?;
            println!("wrote {}", json.display());
            println!(
                "detailed balance max z: {:.2} (bound {})",
                report.detailed_balance_max_z, report.detailed_balance_bound
            );
            for check in &report.marginal_checks {
                println!("{}: KS {:?} pass {}", check.kernel, check.ks, check.pass);
            }
            if !report.pass {
                return Err(HarnessError::Runtime(
                    "stationarity suite failed".to_string(),
                ));
            }
        }
        Command::Validate { config } => match validate_config(&config) {
            Ok(parsed) => {
                println!("configuration is valid:");
                println!("{}", serde_json::to_string_pretty(&parsed)?);
            }
            Err(errors) => return Err(HarnessError::Config(errors)),
        },
        Command::EmitPlots { result, out } => {
            let parsed = RunResult::read_json(&result)?;
            let out_dir = out.unwrap_or_else(|| parsed.config.output_dir.clone());
            let csvs = emit_plot_data(&parsed, &out_dir)?;
            for c in csvs {
                println!("wrote {}", c.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
