//! Bayesian binary-classification benchmark: a Whittle-Matern Gaussian
//! process prior on the level-set function, truncated Karhunen-Loeve
//! expansion of its coefficients, a two-phase log-permeability field, a 1D
//! Darcy pressure solve, four point observations, and the effective
//! permeability as the quantity of interest.
//!
//! The forward map is invariant under positive scaling of the coefficient
//! vector (only the sign pattern of the level-set function matters), so the
//! inference problem lives on the unit sphere with an ACG prior given by the
//! KL eigenvalues.

mod cache;

pub use cache::KlCacheConfig;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{eigendecompose_kernel_matrix, CovarianceModel};
use crate::sphere::SphereVector;

/// Log-permeability of the two phases.
pub const U_LOW: f64 = -2.0;
pub const U_HIGH: f64 = 2.0;

/// Pressure boundary values p(0) and p(1).
pub const BOUNDARY: (f64, f64) = (0.0, 2.0);

/// Observation locations.
pub const OBSERVATION_POINTS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Default grid: 1001 nodes, spacing 1e-3.
pub const DEFAULT_GRID_SIZE: usize = 1001;

/// At most this many eigenpairs are retained in the KL basis.
pub const MAX_EIGENPAIRS: usize = 800;

/// Nonzero leading coefficients of the true level-set function.
pub const TRUTH_COEFFICIENTS: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 5.0, 1.0, 1.0, 1.0];

/// Whittle-Matern covariance with variance 1, correlation length 0.1 and
/// smoothness 3/2: c(s,t) = (1 + sqrt(3)|t-s|/0.1) exp(-sqrt(3)|t-s|/0.1).
pub fn whittle_matern_cov(s: f64, t: f64) -> f64 {
    let scaled = (t - s).abs() * (3.0f64.sqrt() / 0.1);
    (1.0 + scaled) * (-scaled).exp()
}

/// Leading eigenpairs of the Whittle-Matern covariance operator on a uniform
/// grid over [0, 1], with eigenfunctions L2-normalized (`dt sum phi^2 = 1`)
/// and oriented so that `phi_i(0) > 0`.
pub struct KlBasis {
    pub grid: Vec<f64>,
    pub dt: f64,
    /// descending, strictly positive
    pub eigenvalues: DVector<f64>,
    /// grid_size x count; column i is the i-th discrete eigenfunction
    pub functions: DMatrix<f64>,
}

impl KlBasis {
    /// Solves the discrete eigenproblem from scratch. This is the expensive
    /// path; prefer [`KlBasis::load_or_build`] where a cache directory is
    /// available.
    pub fn build(grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidDimension(grid_size));
        }
        let dt = 1.0 / (grid_size as f64 - 1.0);
        let grid: Vec<f64> = (0..grid_size).map(|k| k as f64 * dt).collect();
        let model = eigendecompose_kernel_matrix(&grid, whittle_matern_cov)?;
        let keep = model.rank().min(MAX_EIGENPAIRS);
        let model = model.truncate(keep)?;
        let (eigenvalues, functions) = match model {
            CovarianceModel::Spectral {
                eigenvalues,
                basis: Some(functions),
            } => (eigenvalues, functions),
            _ => unreachable!("eigendecomposition returns a spectral model with basis"),
        };
        Ok(Self {
            grid,
            dt,
            eigenvalues,
            functions,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Level-set function values `g(t_k) = sum_i x_i phi_i(t_k)` for a
    /// coefficient vector of length at most `count`.
    pub fn synthesize(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        assert!(
            coefficients.len() <= self.count(),
            "more coefficients than retained eigenpairs"
        );
        self.functions.columns(0, coefficients.len()) * coefficients
    }

    /// Diagonal ACG/Gaussian prior covariance over the leading `dim`
    /// coefficients.
    pub fn prior_covariance(&self, dim: usize) -> Result<CovarianceModel> {
        if dim < 2 || dim > self.count() {
            return Err(Error::InvalidDimension(dim));
        }
        CovarianceModel::diagonal(self.eigenvalues.rows(0, dim).into_owned())
    }
}

/// A level-set function on the grid together with the two-phase field it
/// induces through `u = U_LOW + (U_HIGH - U_LOW) * 1[g >= 0]`.
#[derive(Debug, Clone)]
pub struct LevelSetField {
    pub g_values: DVector<f64>,
    pub u_values: DVector<f64>,
}

/// Applies the KL expansion and the closed-at-zero indicator rule.
pub fn synthesize_level_set(coefficients: &DVector<f64>, kl: &KlBasis) -> LevelSetField {
    let g_values = kl.synthesize(coefficients);
    let u_values = g_values.map(|g| if g >= 0.0 { U_HIGH } else { U_LOW });
    LevelSetField { g_values, u_values }
}

/// Solves the 1D Darcy problem on the grid by the trapezoidal rule:
/// `p(t) = 2 S_t(exp(-u)) / S_1(exp(-u))` with `S_t(f) = int_0^t f`.
/// The boundary values p(0) = 0 and p(1) = 2 hold exactly.
pub fn solve_darcy_1d(u_values: &DVector<f64>, dt: f64) -> DVector<f64> {
    let m = u_values.len();
    let mut cumulative = DVector::zeros(m);
    let mut prev = (-u_values[0]).exp();
    let mut acc = 0.0;
    for k in 1..m {
        let curr = (-u_values[k]).exp();
        acc += 0.5 * dt * (prev + curr);
        cumulative[k] = acc;
        prev = curr;
    }
    let total = cumulative[m - 1];
    cumulative.map(|s| BOUNDARY.1 * s / total)
}

/// Effective homogenised permeability `(int exp(-u))^{-1}` by the same
/// trapezoidal rule.
pub fn effective_permeability(u_values: &DVector<f64>, dt: f64) -> f64 {
    let m = u_values.len();
    let mut acc = 0.0;
    let mut prev = (-u_values[0]).exp();
    for k in 1..m {
        let curr = (-u_values[k]).exp();
        acc += 0.5 * dt * (prev + curr);
        prev = curr;
    }
    1.0 / acc
}

fn interpolate(grid: &[f64], values: &DVector<f64>, t: f64) -> f64 {
    let dt = grid[1] - grid[0];
    let pos = t / dt;
    let lo = (pos.floor() as usize).min(grid.len() - 1);
    let hi = (lo + 1).min(grid.len() - 1);
    let frac = pos - lo as f64;
    values[lo] * (1.0 - frac) + values[hi] * frac
}

/// The full benchmark problem: KL basis, inference dimension, data, and
/// noise model. Immutable after construction; chains evaluate the potential
/// through a shared reference.
pub struct BenchmarkProblem {
    pub kl: Arc<KlBasis>,
    pub dim: usize,
    pub data: [f64; 4],
    pub noise_variances: [f64; 4],
    /// the full 8-term truth coefficient vector used to generate the data
    pub truth: DVector<f64>,
    pub true_observations: [f64; 4],
}

impl BenchmarkProblem {
    /// Builds the problem for inference dimension `dim`, generating
    /// synthetic data from the 8-term truth with noise variances
    /// `p_true(0.2 j) / 10` and additive Gaussian noise drawn from
    /// `noise_seed`. `None` gives the noise-free data (then the potential
    /// vanishes at the projected truth).
    ///
    /// The truth coefficients scale the KL modes in the expansion
    /// `g = sum_i X_i phi_i` with prior `X_i ~ N(0, lambda_i)`, i.e. the
    /// i-th true coefficient is `TRUTH_COEFFICIENTS[i] * sqrt(lambda_i)`,
    /// one prior standard deviation per unit.
    pub fn build(kl: Arc<KlBasis>, dim: usize, noise_seed: Option<u64>) -> Result<Self> {
        if kl.count() < TRUTH_COEFFICIENTS.len() {
            return Err(Error::InvalidParameter {
                name: "kl",
                reason: "need at least 8 eigenpairs for the truth".into(),
            });
        }
        let truth = DVector::from_fn(TRUTH_COEFFICIENTS.len(), |i, _| {
            TRUTH_COEFFICIENTS[i] * kl.eigenvalues[i].sqrt()
        });
        Self::build_with_truth(kl, dim, truth, noise_seed)
    }

    /// [`BenchmarkProblem::build`] with an explicit truth coefficient
    /// vector (in the unwhitened `X_i` convention).
    pub fn build_with_truth(
        kl: Arc<KlBasis>,
        dim: usize,
        truth: DVector<f64>,
        noise_seed: Option<u64>,
    ) -> Result<Self> {
        if dim < 2 || dim > kl.count() {
            return Err(Error::InvalidDimension(dim));
        }
        if kl.count() < truth.len() {
            return Err(Error::InvalidParameter {
                name: "kl",
                reason: "more truth coefficients than eigenpairs".into(),
            });
        }
        let field = synthesize_level_set(&truth, &kl);
        let pressure = solve_darcy_1d(&field.u_values, kl.dt);
        let mut true_observations = [0.0; 4];
        for (j, t) in OBSERVATION_POINTS.iter().enumerate() {
            true_observations[j] = interpolate(&kl.grid, &pressure, *t);
        }
        let mut noise_variances = [0.0; 4];
        for j in 0..4 {
            if true_observations[j] <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "truth",
                    reason: format!(
                        "non-positive true observation {} at point {}",
                        true_observations[j], OBSERVATION_POINTS[j]
                    ),
                });
            }
            noise_variances[j] = true_observations[j] / 10.0;
        }
        let mut data = true_observations;
        if let Some(seed) = noise_seed {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            for j in 0..4 {
                let z: f64 = StandardNormal.sample(&mut rng);
                data[j] += noise_variances[j].sqrt() * z;
            }
        }
        Ok(Self {
            kl,
            dim,
            data,
            noise_variances,
            truth,
            true_observations,
        })
    }

    /// The four pressure observations for a coefficient vector (any length
    /// up to the retained eigenpairs). Invariant under positive scaling of
    /// the coefficients.
    pub fn forward_observe(&self, coefficients: &DVector<f64>) -> [f64; 4] {
        let field = synthesize_level_set(coefficients, &self.kl);
        let pressure = solve_darcy_1d(&field.u_values, self.kl.dt);
        let mut out = [0.0; 4];
        for (j, t) in OBSERVATION_POINTS.iter().enumerate() {
            out[j] = interpolate(&self.kl.grid, &pressure, *t);
        }
        out
    }

    /// Negative log likelihood (weighted least-squares misfit) on the
    /// sphere. Bounded because the pressure lies in [0, 2].
    pub fn potential(&self, x: &SphereVector) -> f64 {
        assert_eq!(x.dim(), self.dim, "state dimension mismatch");
        let observed = self.forward_observe(x.coords());
        let mut misfit = 0.0;
        for j in 0..4 {
            let r = self.data[j] - observed[j];
            misfit += r * r / self.noise_variances[j];
        }
        0.5 * misfit
    }

    /// Effective homogenised permeability of the field induced by `x`.
    pub fn quantity_of_interest(&self, x: &SphereVector) -> f64 {
        assert_eq!(x.dim(), self.dim, "state dimension mismatch");
        let field = synthesize_level_set(x.coords(), &self.kl);
        effective_permeability(&field.u_values, self.kl.dt)
    }

    /// ACG prior covariance for the inference dimension.
    pub fn prior_covariance(&self) -> CovarianceModel {
        self.kl
            .prior_covariance(self.dim)
            .expect("dim validated at construction")
    }
}
