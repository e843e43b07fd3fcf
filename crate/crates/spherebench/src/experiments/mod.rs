//! Scripted experiment drivers behind the CLI subcommands.

pub mod appendix_b;
pub mod benchmark;
pub mod counterexample;
pub mod stationarity;

use nalgebra::DMatrix;
use sphere_mcmc::gaussian::CovarianceModel;
use sphere_mcmc::kernels::KernelId;

/// The explicit 3x3 covariance used by the one-step marginal comparison and
/// the stationarity suite.
pub fn marginal_test_covariance() -> CovarianceModel {
    CovarianceModel::dense(DMatrix::from_row_slice(
        3,
        3,
        &[1.25, 0.33, -1.62, 0.33, 0.42, -0.09, -1.62, -0.09, 2.85],
    ))
    .expect("fixed SPD matrix")
}

/// pCN step size of the one-step marginal comparison.
pub const MARGINAL_TEST_STEP_SIZE: f64 = 0.7;

pub(crate) const SALT_TUNER: u64 = 0x7455_4e45;
pub(crate) const SALT_CHAIN: u64 = 0x4348_4149;

/// Deterministic per-worker RNG seed from the user seed and the run cell.
pub fn mix_seed(base: u64, kernel: KernelId, dimension: usize, salt: u64) -> u64 {
    let mut z = base
        ^ (kernel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (dimension as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ salt;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
