//! The level-set inversion benchmark and the dimension sweep: tuning, chain
//! runs, and diagnostics per (kernel, dimension, seed), parallelized with
//! one worker per cell and merged in deterministic key order.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use sphere_mcmc::diagnostics::DiagnosticsReport;
use sphere_mcmc::gaussian::CovarianceModel;
use sphere_mcmc::kernels::{
    run_chain, tune_step_size, AcgPosterior, Functional, GeodesicWalkMh, KernelId,
    ReprojectedEss, ReprojectedPcn, SphereKernel, TangentMh,
};
use sphere_mcmc::levelset::{BenchmarkProblem, KlBasis};
use sphere_mcmc::sphere::{acg_sample, SphereVector};
use sphere_mcmc::Result as LibResult;

use crate::config::{ExperimentConfig, Tuning};
use crate::error::{HarnessError, Result};
use crate::experiments::{mix_seed, SALT_CHAIN, SALT_TUNER};
use crate::report::{KernelRunReport, RunResult};

/// Tuning bounds per kernel family.
pub fn parameter_bounds(id: KernelId) -> Option<(f64, f64)> {
    match id {
        KernelId::ReproPcn => Some((1e-4, 1.0)),
        KernelId::GeodesicMh => Some((1e-4, std::f64::consts::FRAC_PI_2)),
        KernelId::TangentMh => Some((1e-4, 8.0)),
        _ => None,
    }
}

/// Builds a benchmark sampler for the given kernel id and step parameter
/// (ignored by the slice kernel).
pub fn build_kernel(
    problem: &Arc<BenchmarkProblem>,
    prior: &Arc<CovarianceModel>,
    id: KernelId,
    parameter: f64,
) -> LibResult<Box<dyn SphereKernel + Send + Sync>> {
    let p = problem.clone();
    let potential = move |x: &SphereVector| p.potential(x);
    match id {
        KernelId::ReproPcn => Ok(Box::new(ReprojectedPcn::new(
            prior.clone(),
            parameter,
            potential,
        )?)),
        KernelId::ReproEss => Ok(Box::new(ReprojectedEss::new(prior.clone(), potential))),
        KernelId::GeodesicMh => Ok(Box::new(GeodesicWalkMh::new(
            parameter,
            AcgPosterior::new(prior.clone(), potential),
        )?)),
        KernelId::TangentMh => Ok(Box::new(TangentMh::new(
            parameter,
            AcgPosterior::new(prior.clone(), potential),
        )?)),
        other => Err(sphere_mcmc::Error::InvalidParameter {
            name: "kernel",
            reason: format!("`{other}` is not a benchmark sampler"),
        }),
    }
}

struct TunedCell {
    parameter: Option<f64>,
    converged: Option<bool>,
    warning: Option<String>,
}

fn tune_cell(
    problem: &Arc<BenchmarkProblem>,
    prior: &Arc<CovarianceModel>,
    id: KernelId,
    tuning: &Tuning,
    base_seed: u64,
) -> Result<TunedCell> {
    let Some(bounds) = parameter_bounds(id) else {
        return Ok(TunedCell {
            parameter: None,
            converged: None,
            warning: None,
        });
    };
    match tuning {
        Tuning::Fixed { values } => {
            let value = values.get(id.as_str()).copied().ok_or_else(|| {
                HarnessError::Config(vec![format!(
                    "fixed tuning is missing a value for kernel `{id}`"
                )])
            })?;
            Ok(TunedCell {
                parameter: Some(value),
                converged: None,
                warning: None,
            })
        }
        Tuning::Auto { target_rate } => {
            let mut rng =
                ChaCha12Rng::seed_from_u64(mix_seed(base_seed, id, problem.dim, SALT_TUNER));
            let initial = acg_sample(prior, &mut rng);
            let problem = problem.clone();
            let prior2 = prior.clone();
            let build = move |value: f64| -> LibResult<Box<dyn SphereKernel>> {
                build_kernel(&problem, &prior2, id, value)
                    .map(|k| k as Box<dyn SphereKernel>)
            };
            let tuned = tune_step_size(&build, bounds, *target_rate, &initial, &mut rng)?;
            Ok(TunedCell {
                parameter: Some(tuned.value),
                converged: Some(tuned.converged),
                warning: tuned.warning,
            })
        }
    }
}

/// Runs the benchmark described by the config: for every (kernel, dimension)
/// tune once, then run one chain per seed recording the effective
/// permeability, and report diagnostics.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<RunResult> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(HarnessError::Config(violations));
    }
    let kernel_ids = config.kernel_ids().map_err(HarnessError::Config)?;
    let start = Instant::now();
    let kl = KlBasis::load_or_build(&config.cache_dir, config.grid_size, !config.require_cache)?;

    // per-dimension problem and prior, shared read-only across workers
    let mut problems: BTreeMap<usize, (Arc<BenchmarkProblem>, Arc<CovarianceModel>)> =
        BTreeMap::new();
    for &dim in &config.dimensions {
        let problem = Arc::new(BenchmarkProblem::build(
            kl.clone(),
            dim,
            Some(config.data_seed),
        )?);
        let prior = Arc::new(problem.prior_covariance());
        problems.insert(dim, (problem, prior));
    }

    // tune sequentially (cheap relative to the runs), once per (kernel, dim)
    let tuning_base = config.seeds[0];
    let mut tuned: BTreeMap<(KernelId, usize), Arc<TunedCell>> = BTreeMap::new();
    for &dim in &config.dimensions {
        let (problem, prior) = &problems[&dim];
        for &id in &kernel_ids {
            let cell = tune_cell(problem, prior, id, &config.tuning, tuning_base)?;
            tuned.insert((id, dim), Arc::new(cell));
        }
    }

    let mut cells: Vec<(KernelId, usize, u64)> = Vec::new();
    for &id in &kernel_ids {
        for &dim in &config.dimensions {
            for &seed in &config.seeds {
                cells.push((id, dim, seed));
            }
        }
    }

    let runs: Vec<Result<KernelRunReport>> = cells
        .par_iter()
        .map(|&(id, dim, seed)| -> Result<KernelRunReport> {
            let (problem, prior) = &problems[&dim];
            let cell = &tuned[&(id, dim)];
            let parameter = cell.parameter.unwrap_or(f64::NAN);
            let kernel = build_kernel(problem, prior, id, parameter)?;
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, id, dim, SALT_CHAIN));
            let initial = acg_sample(prior, &mut rng);
            let q_problem = problem.clone();
            let functionals = vec![Functional::new("q", move |x: &SphereVector| {
                q_problem.quantity_of_interest(x)
            })];
            let store = config.store_traces.then_some(config.thinning);
            let mut trace = run_chain(
                kernel.as_ref(),
                &initial,
                config.iterations,
                config.burn_in,
                &functionals,
                store,
                &mut rng,
            )?;
            trace.seed = Some(seed);
            trace.tuning = cell.parameter;
            let diagnostics = DiagnosticsReport::from_trace(&trace)?;
            let trace_file = match (&trace.states, config.store_traces) {
                (Some(states), true) => {
                    let relative = format!("traces/{}_d{dim}_s{seed}.bin", id.as_str());
                    let path = config.output_dir.join(&relative);
                    if let Some(parent) = path.parent() {
                        std::fs::create_dir_all(parent)?;
                    }
                    let flat: Vec<f64> =
                        states.iter().flat_map(|s| s.iter().cloned()).collect();
                    let checksum = sphere_mcmc::arrayfile::write_f64_array(&path, &flat)?;
                    let sidecar = serde_json::json!({
                        "kernel": id.as_str(),
                        "dimension": dim,
                        "seed": seed,
                        "states": states.len(),
                        "thinning": config.thinning,
                        "layout": "state-major",
                        "checksum_sha256": checksum,
                    });
                    std::fs::write(
                        path.with_extension("json"),
                        serde_json::to_string_pretty(&sidecar)?,
                    )?;
                    Some(relative)
                }
                _ => None,
            };
            Ok(KernelRunReport {
                kernel: id.as_str().to_string(),
                dimension: dim,
                seed,
                tuned_parameter: cell.parameter,
                tuner_converged: cell.converged,
                tuner_warning: cell.warning.clone(),
                diagnostics,
                trace_file,
            })
        })
        .collect();

    let mut reports = Vec::with_capacity(runs.len());
    for run in runs {
        reports.push(run?);
    }
    let mut result = RunResult::new(config.clone(), reports);
    result.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// The dimension sweep is the benchmark over the sweep dimensions; at full
/// scale it runs the published grid, which takes orders of magnitude longer.
pub fn run_sweep(config: &ExperimentConfig) -> Result<RunResult> {
    let mut config = config.clone();
    if config.full_scale {
        eprintln!(
            "warning: full-scale sweep (d up to 640, 1e6 iterations) requested; \
             expect a long runtime"
        );
        config.dimensions = vec![10, 20, 40, 80, 160, 320, 640];
        config.iterations = 1_000_000;
    }
    run_benchmark(&config)
}
