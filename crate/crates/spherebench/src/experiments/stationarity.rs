//! Stationarity and reversibility checks for the reprojected kernels:
//! marginals of flat-potential chains against direct ACG sampling, and a
//! binned detailed-balance symmetry check on the circle against a
//! non-constant potential.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sphere_mcmc::diagnostics::{iact, ks_statistic, ks_two_sample_threshold};
use sphere_mcmc::gaussian::CovarianceModel;
use sphere_mcmc::kernels::{
    run_chain, Functional, ReprojectedEss, ReprojectedPcn, SphereKernel,
};
use sphere_mcmc::sphere::{acg_sample, SphereVector};

use crate::error::Result;
use crate::experiments::{marginal_test_covariance, MARGINAL_TEST_STEP_SIZE};

/// Raw-chain KS bound for the flat-potential marginal comparison.
pub const RAW_KS_BOUND: f64 = 0.015;
const DETAILED_BALANCE_BINS: usize = 72;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub kernel: String,
    /// per-coordinate two-sample KS statistic, chain vs direct draws
    pub ks: Vec<f64>,
    /// 1%-level thresholds at the autocorrelation-adjusted effective size
    pub ks_threshold: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityReport {
    pub chain_steps: usize,
    pub marginal_checks: Vec<MarginalCheck>,
    /// max over bin pairs of |N_ij - N_ji| / sqrt(N_ij + N_ji)
    pub detailed_balance_max_z: f64,
    pub detailed_balance_bound: f64,
    pub pass: bool,
}

fn marginal_check(
    kernel: &dyn SphereKernel,
    cov: &Arc<CovarianceModel>,
    steps: usize,
    rng: &mut ChaCha12Rng,
) -> Result<MarginalCheck> {
    let initial = acg_sample(cov, rng);
    let functionals: Vec<Functional> = (0..3).map(Functional::coordinate).collect();
    let trace = run_chain(kernel, &initial, steps, 0, &functionals, None, rng)?;
    let mut direct = vec![Vec::with_capacity(steps); 3];
    for _ in 0..steps {
        let p = acg_sample(cov, rng);
        for i in 0..3 {
            direct[i].push(p.coords()[i]);
        }
    }
    let mut ks = Vec::with_capacity(3);
    let mut thresholds = Vec::with_capacity(3);
    let mut pass = true;
    for i in 0..3 {
        let series = &trace.functional_series[&format!("x{i}")];
        let stat = ks_statistic(series, &direct[i]);
        // the chain is autocorrelated: compare at the effective sample size
        let tau = iact(series)?;
        let n_eff = ((steps as f64 / tau) as usize).max(100);
        let threshold = ks_two_sample_threshold(n_eff, steps, 0.01);
        pass &= stat < threshold && stat < RAW_KS_BOUND;
        ks.push(stat);
        thresholds.push(threshold);
    }
    Ok(MarginalCheck {
        kernel: kernel.id().as_str().to_string(),
        ks,
        ks_threshold: thresholds,
        pass,
    })
}

/// Binned two-step frequency symmetry on S^1 for the reprojected pCN kernel
/// against a non-constant potential. Under reversibility the transition
/// count matrix is symmetric up to Monte Carlo noise.
fn detailed_balance_z(steps: usize, seed: u64) -> Result<f64> {
    let cov = Arc::new(
        CovarianceModel::dense(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[2.0, 0.0, 0.0, 1.0],
        ))
        .expect("diagonal SPD"),
    );
    let potential = |x: &SphereVector| 2.0 * x.coords()[0];
    let kernel = ReprojectedPcn::new(cov.clone(), 0.5, potential)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let initial = acg_sample(&cov, &mut rng);
    let angle = |x: &SphereVector| x.coords()[1].atan2(x.coords()[0]);
    let trace = run_chain(
        &kernel,
        &initial,
        steps,
        10_000,
        &[Functional::new("angle", angle)],
        None,
        &mut rng,
    )?;
    let series = &trace.functional_series["angle"];
    let bin_of = |a: f64| {
        let normalized = (a + std::f64::consts::PI) / std::f64::consts::TAU;
        ((normalized * DETAILED_BALANCE_BINS as f64) as usize).min(DETAILED_BALANCE_BINS - 1)
    };
    let mut counts = vec![vec![0u64; DETAILED_BALANCE_BINS]; DETAILED_BALANCE_BINS];
    for pair in series.windows(2) {
        counts[bin_of(pair[0])][bin_of(pair[1])] += 1;
    }
    let mut max_z = 0.0f64;
    for i in 0..DETAILED_BALANCE_BINS {
        for j in 0..i {
            let total = counts[i][j] + counts[j][i];
            if total == 0 {
                continue;
            }
            let z = (counts[i][j] as f64 - counts[j][i] as f64).abs() / (total as f64).sqrt();
            max_z = max_z.max(z);
        }
    }
    Ok(max_z)
}

/// Runs the full suite: flat-potential marginal checks for both reprojected
/// kernels on the 3x3 comparison covariance, plus the circle
/// detailed-balance check.
pub fn run_stationarity_suite(chain_steps: usize, seed: u64) -> Result<StationarityReport> {
    let cov = Arc::new(marginal_test_covariance());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let flat = |_: &SphereVector| 0.0;
    let pcn = ReprojectedPcn::new(cov.clone(), MARGINAL_TEST_STEP_SIZE, flat)?;
    let ess = ReprojectedEss::new(cov.clone(), flat);
    let mut marginal_checks = Vec::new();
    marginal_checks.push(marginal_check(&pcn, &cov, chain_steps, &mut rng)?);
    marginal_checks.push(marginal_check(&ess, &cov, chain_steps, &mut rng)?);
    let max_z = detailed_balance_z(510_000, seed ^ 0xD8)?;
    let bound = 4.0;
    let pass = marginal_checks.iter().all(|c| c.pass) && max_z < bound;
    Ok(StationarityReport {
        chain_steps,
        marginal_checks,
        detailed_balance_max_z: max_z,
        detailed_balance_bound: bound,
        pass,
    })
}

/// Serializable run summary keyed for CSV emission.
pub fn metric_rows(report: &StationarityReport) -> BTreeMap<String, f64> {
    let mut rows = BTreeMap::new();
    for check in &report.marginal_checks {
        for (i, (ks, threshold)) in check.ks.iter().zip(&check.ks_threshold).enumerate() {
            rows.insert(format!("{}/ks_x{i}", check.kernel), *ks);
            rows.insert(format!("{}/ks_threshold_x{i}", check.kernel), *threshold);
        }
    }
    rows.insert(
        "detailed_balance_max_z".into(),
        report.detailed_balance_max_z,
    );
    rows
}
