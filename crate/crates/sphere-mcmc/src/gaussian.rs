//! Finite-dimensional centred Gaussian measures: covariance representations,
//! sampling, whitening, precision quadratic forms, and the discrete
//! eigenproblem used for Karhunen-Loeve truncation.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const BASIS_ORTHO_TOL: f64 = 1e-8;

/// Covariance of a centred Gaussian in one of two representations: a dense
/// SPD matrix (kept with its Cholesky factor), or a diagonal spectrum
/// `lambda_1 >= ... >= lambda_k > 0`, optionally carrying the orthonormal
/// basis in which the spectrum lives.
pub enum CovarianceModel {
    Dense {
        matrix: DMatrix<f64>,
        /// lower-triangular Cholesky factor, L L^T = C
        factor_l: DMatrix<f64>,
    },
    Spectral {
        eigenvalues: DVector<f64>,
        /// columns are orthonormal basis vectors; `None` means the standard
        /// basis (plain diagonal covariance).
        basis: Option<DMatrix<f64>>,
    },
}

impl CovarianceModel {
    /// Dense SPD covariance. Fails when the matrix is not symmetric within
    /// 1e-10 or the Cholesky factorization does not go through.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotPositiveDefinite("matrix is not square".into()));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetry at ({i},{j}): {} vs {}",
                        matrix[(i, j)],
                        matrix[(j, i)]
                    )));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let factor_l = chol.l();
        Ok(Self::Dense { matrix, factor_l })
    }

    /// Plain diagonal covariance; entries must be positive and sorted in
    /// non-increasing order.
    pub fn diagonal(eigenvalues: DVector<f64>) -> Result<Self> {
        Self::spectral(eigenvalues, None)
    }

    pub fn spectral(eigenvalues: DVector<f64>, basis: Option<DMatrix<f64>>) -> Result<Self> {
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite(
                "spectrum contains a non-positive eigenvalue".into(),
            ));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotPositiveDefinite(
                "spectrum is not sorted in non-increasing order".into(),
            ));
        }
        if let Some(b) = &basis {
            if b.ncols() != eigenvalues.len() {
                return Err(Error::DimensionMismatch(b.ncols(), eigenvalues.len()));
            }
            let gram = b.transpose() * b;
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    if (gram[(i, j)] - expect).abs() > BASIS_ORTHO_TOL {
                        return Err(Error::NotPositiveDefinite(format!(
                            "basis columns not orthonormal: gram({i},{j}) = {}",
                            gram[(i, j)]
                        )));
                    }
                }
            }
        }
        Ok(Self::Spectral { eigenvalues, basis })
    }

    /// Ambient dimension of the Gaussian.
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense { matrix, .. } => matrix.nrows(),
            Self::Spectral { eigenvalues, basis } => {
                basis.as_ref().map_or(eigenvalues.len(), |b| b.nrows())
            }
        }
    }

    /// Number of retained eigenpairs (equals `dim` for dense models).
    pub fn rank(&self) -> usize {
        match self {
            Self::Dense { matrix, .. } => matrix.nrows(),
            Self::Spectral { eigenvalues, .. } => eigenvalues.len(),
        }
    }

    pub fn eigenvalues(&self) -> Option<&DVector<f64>> {
        match self {
            Self::Dense { .. } => None,
            Self::Spectral { eigenvalues, .. } => Some(eigenvalues),
        }
    }

    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Dense { .. } => None,
            Self::Spectral { basis, .. } => basis.as_ref(),
        }
    }

    /// Applies a square root of the covariance to `z` (maps white noise to a
    /// draw of N(0, C)).
    pub fn apply_sqrt(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Dense { factor_l, .. } => factor_l * z,
            Self::Spectral { eigenvalues, basis } => {
                let scaled = DVector::from_iterator(
                    eigenvalues.len(),
                    eigenvalues.iter().zip(z.iter()).map(|(l, zi)| l.sqrt() * zi),
                );
                match basis {
                    Some(b) => b * scaled,
                    None => scaled,
                }
            }
        }
    }

    /// One draw of N(0, C).
    pub fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let z = DVector::from_iterator(
            self.rank(),
            (0..self.rank()).map(|_| StandardNormal.sample(&mut *rng)),
        );
        self.apply_sqrt(&z)
    }

    /// The precision quadratic form `x^T C^{-1} x`, computed through the
    /// factorization (never by forming the inverse). For truncated spectral
    /// models this is the form on the span of the retained basis.
    pub fn precision_quadratic(&self, x: &DVector<f64>) -> f64 {
        match self {
            Self::Dense { factor_l, .. } => {
                // solve L u = x, then x^T C^-1 x = |u|^2
                let u = factor_l
                    .solve_lower_triangular(x)
                    .expect("Cholesky factor is invertible by construction");
                u.norm_squared()
            }
            Self::Spectral { eigenvalues, basis } => {
                let coeffs = match basis {
                    Some(b) => b.transpose() * x,
                    None => x.clone(),
                };
                coeffs
                    .iter()
                    .zip(eigenvalues.iter())
                    .map(|(c, l)| c * c / l)
                    .sum()
            }
        }
    }

    /// log det C over the retained eigenpairs.
    pub fn log_det(&self) -> f64 {
        match self {
            Self::Dense { factor_l, .. } => {
                2.0 * factor_l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
            }
            Self::Spectral { eigenvalues, .. } => eigenvalues.iter().map(|l| l.ln()).sum(),
        }
    }

    /// Spectral truncation to the leading `k` eigenpairs.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        match self {
            Self::Dense { .. } => Err(Error::InvalidParameter {
                name: "truncate",
                reason: "only spectral models can be truncated".into(),
            }),
            Self::Spectral { eigenvalues, basis } => {
                if k == 0 || k > eigenvalues.len() {
                    return Err(Error::InvalidParameter {
                        name: "truncate",
                        reason: format!("k = {k} outside 1..={}", eigenvalues.len()),
                    });
                }
                Ok(Self::Spectral {
                    eigenvalues: eigenvalues.rows(0, k).into_owned(),
                    basis: basis.as_ref().map(|b| b.columns(0, k).into_owned()),
                })
            }
        }
    }
}

/// A seedable stream of N(0, C) draws. Two streams built from equal seeds
/// replay the same sequence.
pub struct GaussianSampleStream<'a> {
    cov: &'a CovarianceModel,
    rng: rand_chacha::ChaCha12Rng,
}

impl<'a> GaussianSampleStream<'a> {
    pub fn new(cov: &'a CovarianceModel, seed: u64) -> Self {
        use rand::SeedableRng;
        Self {
            cov,
            rng: rand_chacha::ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn next_sample(&mut self) -> DVector<f64> {
        self.cov.sample(&mut self.rng)
    }
}

/// Discretizes the integral operator with kernel `covariance_function` on a
/// uniform grid (Nystrom with rectangle weights `c(s_i, t_j) * dt`), solves
/// the symmetric eigenproblem, and returns a spectral model whose basis
/// columns are the discrete eigenfunctions rescaled by `1/sqrt(dt)` so that
/// `dt * sum_k phi_i(t_k) phi_j(t_k) = delta_ij`.
///
/// Eigenfunction signs are fixed by orienting each column so that its first
/// grid value is positive; this keeps the expansion reproducible across
/// eigensolver implementations.
///
/// Eigenvalues below `-1e-10 * lambda_1` fail the positive-definiteness
/// check; small negative values are dropped from the returned spectrum.
pub fn eigendecompose_kernel_matrix(
    grid: &[f64],
    covariance_function: impl Fn(f64, f64) -> f64,
) -> Result<CovarianceModel> {
    let m = grid.len();
    if m < 2 {
        return Err(Error::InvalidDimension(m));
    }
    let dt = grid[1] - grid[0];
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = covariance_function(grid[i], grid[j]) * dt;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let lambda_max = eig.eigenvalues[order[0]];
    if lambda_max <= 0.0 {
        return Err(Error::NotPositiveDefinite(
            "leading eigenvalue is not positive".into(),
        ));
    }
    let mut eigenvalues = Vec::with_capacity(m);
    let mut columns = Vec::with_capacity(m);
    for &idx in &order {
        let l = eig.eigenvalues[idx];
        if l < -1e-10 * lambda_max {
            return Err(Error::NotPositiveDefinite(format!(
                "eigenvalue {l} below tolerance relative to {lambda_max}"
            )));
        }
        if l <= 0.0 {
            continue;
        }
        let mut col = eig.eigenvectors.column(idx).into_owned();
        if col[0] < 0.0 {
            col.neg_mut();
        }
        col.scale_mut(1.0 / dt.sqrt());
        eigenvalues.push(l);
        columns.push(col);
    }
    let functions = DMatrix::from_columns(&columns);
    // The 1/sqrt(dt) scaling breaks Euclidean orthonormality on purpose, so
    // bypass the spectral() gram check and validate the L2 normalization on
    // diagonal and adjacent pairs (the full gram is O(k^2 m)).
    for i in 0..columns.len() {
        let nrm = columns[i].dot(&columns[i]) * dt;
        if (nrm - 1.0).abs() > BASIS_ORTHO_TOL {
            return Err(Error::NotPositiveDefinite(format!(
                "discrete eigenfunction {i} not L2-normalized: {nrm}"
            )));
        }
        if i + 1 < columns.len() {
            let cross = columns[i].dot(&columns[i + 1]) * dt;
            if cross.abs() > BASIS_ORTHO_TOL {
                return Err(Error::NotPositiveDefinite(format!(
                    "discrete eigenfunctions {i},{} not orthogonal: {cross}",
                    i + 1
                )));
            }
        }
    }
    Ok(CovarianceModel::Spectral {
        eigenvalues: DVector::from_vec(eigenvalues),
        basis: Some(functions),
    })
}
