//! Sphere primitives: radial projection, the geodesic metric, the angular
//! central Gaussian (ACG) distribution, and the radial conditional law of a
//! centred Gaussian given its direction.
//!
//! The ACG measure with parameter `C` is the push-forward of N(0, C) under
//! radial projection. Conditioned on the direction `x`, the squared radius
//! of a N(0, C) draw follows Gamma(d/2, rate = x^T C^{-1} x / 2), which is
//! what makes exact lifting from the sphere to the ambient space possible.

use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;

/// Norm drift below this is silently renormalized at construction; anything
/// larger is rejected.
const UNIT_DRIFT_TOL: f64 = 1e-8;

/// A point on the unit sphere S^{d-1}, d >= 2. The inner vector has unit
/// Euclidean norm to within 1e-12 (renormalized at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereVector(DVector<f64>);

impl SphereVector {
    /// Wraps a vector that is already unit norm up to 1e-8 drift.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        let norm = coords.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_DRIFT_TOL {
            return Err(Error::NotUnitNorm((norm - 1.0).abs()));
        }
        Ok(Self(coords / norm))
    }

    /// The canonical anchor `e_d` used as the image of the origin under
    /// radial projection.
    pub fn anchor(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut v = DVector::zeros(dim);
        v[dim - 1] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    /// Internal: normalize an arbitrary nonzero vector.
    fn from_unnormalized(v: DVector<f64>) -> Self {
        let norm = v.norm();
        Self(v / norm)
    }
}

impl AsRef<DVector<f64>> for SphereVector {
    fn as_ref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Direction and radius of a nonzero ambient point, with
/// `radius * direction == x`.
#[derive(Debug, Clone)]
pub struct RadialDecomposition {
    pub direction: SphereVector,
    pub radius: f64,
}

impl RadialDecomposition {
    pub fn of(x: &DVector<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidDimension(x.len()));
        }
        let radius = x.norm();
        if radius == 0.0 {
            return Err(Error::InvalidParameter {
                name: "x",
                reason: "zero vector has no radial decomposition".into(),
            });
        }
        Ok(Self {
            direction: SphereVector::from_unnormalized(x.clone()),
            radius,
        })
    }

    pub fn reconstruct(&self) -> DVector<f64> {
        self.direction.coords() * self.radius
    }
}

/// Radial projection x -> x / |x|, mapping the origin to the fixed anchor
/// `e_d` so that the map is defined everywhere.
pub fn project_to_sphere(x: &DVector<f64>) -> Result<SphereVector> {
    if x.len() < 2 {
        return Err(Error::InvalidDimension(x.len()));
    }
    let norm = x.norm();
    if norm == 0.0 {
        return SphereVector::anchor(x.len());
    }
    Ok(SphereVector::from_unnormalized(x.clone()))
}

/// Great-circle distance arccos(<a, b>) in [0, pi]; the inner product is
/// clamped to [-1, 1] so rounding can never produce NaN.
pub fn geodesic_distance(a: &SphereVector, b: &SphereVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.coords().dot(b.coords()).clamp(-1.0, 1.0).acos())
}

/// One draw of ACG(C): a N(0, C) draw pushed through the radial projection.
pub fn acg_sample(cov: &CovarianceModel, rng: &mut dyn RngCore) -> SphereVector {
    let x = cov.sample(rng);
    project_to_sphere(&x).expect("covariance dimension is >= 2 by construction")
}

/// Log density of ACG(C) with respect to the (d-1)-dimensional Hausdorff
/// measure on the sphere:
///
///   log Gamma(d/2) - log 2 - (d/2) log pi - (1/2) log det C
///     - (d/2) log(x^T C^{-1} x).
///
/// Scale-invariant in C: replacing C by any positive multiple leaves the
/// value unchanged.
pub fn acg_log_density(cov: &CovarianceModel, x: &SphereVector) -> f64 {
    let d = x.dim();
    assert_eq!(cov.dim(), d, "covariance/state dimension mismatch");
    let df = d as f64;
    let quad = cov.precision_quadratic(x.coords());
    ln_gamma(df / 2.0)
        - std::f64::consts::LN_2
        - (df / 2.0) * std::f64::consts::PI.ln()
        - 0.5 * cov.log_det()
        - (df / 2.0) * quad.ln()
}

/// The radius R of a N(0, C) draw conditioned on its direction being `x`:
/// R^2 ~ Gamma(shape d/2, rate x^T C^{-1} x / 2).
pub fn radial_conditional_sample(
    cov: &CovarianceModel,
    x: &SphereVector,
    rng: &mut dyn RngCore,
) -> f64 {
    let d = x.dim() as f64;
    let rate = 0.5 * cov.precision_quadratic(x.coords());
    let gamma = Gamma::new(d / 2.0, 1.0 / rate).expect("shape and scale are positive");
    gamma.sample(&mut *rng).sqrt()
}

/// Lifts a sphere point to the ambient space along its ray, with the radius
/// drawn from the exact conditional law. Projecting the result back is the
/// identity on the sphere, and lifting an ACG(C) draw recovers N(0, C).
pub fn lift(x: &SphereVector, cov: &CovarianceModel, rng: &mut dyn RngCore) -> DVector<f64> {
    x.coords() * radial_conditional_sample(cov, x, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma as GammaDist};

    fn identity(d: usize) -> CovarianceModel {
        CovarianceModel::dense(DMatrix::identity(d, d)).unwrap()
    }

    fn uniform_circle_point(rng: &mut impl Rng) -> SphereVector {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        SphereVector::new(DVector::from_vec(vec![theta.cos(), theta.sin()])).unwrap()
    }

    /// Two-sample KS statistic.
    fn ks2(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        d
    }

    #[test]
    fn projection_of_origin_is_anchor() {
        let p = project_to_sphere(&DVector::zeros(4)).unwrap();
        assert_eq!(p.coords().as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn projection_scales() {
        let p = project_to_sphere(&DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert!((p.coords()[0] - 0.6).abs() < 1e-15);
        assert!((p.coords()[1] - 0.8).abs() < 1e-15);

        let n = project_to_sphere(&DVector::from_vec(vec![-2.0, 0.0, 0.0])).unwrap();
        assert_eq!(n.coords().as_slice(), &[-1.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_rejects_dimension_one() {
        assert!(matches!(
            project_to_sphere(&DVector::from_vec(vec![1.0])),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn sphere_vector_rejects_norm_drift() {
        let v = DVector::from_vec(vec![1.0 + 1e-6, 0.0]);
        assert!(SphereVector::new(v).is_err());
        // drift below 1e-8 is silently renormalized
        let v = DVector::from_vec(vec![1.0 + 1e-9, 0.0]);
        let s = SphereVector::new(v).unwrap();
        assert!((s.coords().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_decomposition_round_trip() {
        let x = DVector::from_vec(vec![3.0, -4.0, 12.0]);
        let rd = RadialDecomposition::of(&x).unwrap();
        assert!(rd.radius > 0.0);
        assert!((rd.reconstruct() - &x).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn geodesic_distance_basics() {
        let e1 = SphereVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let me1 = SphereVector::new(DVector::from_vec(vec![-1.0, 0.0])).unwrap();
        let e2 = SphereVector::new(DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(geodesic_distance(&e1, &e1).unwrap(), 0.0);
        assert!((geodesic_distance(&e1, &me1).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(
            (geodesic_distance(&e1, &e2).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15
        );
        let e3 = SphereVector::anchor(3).unwrap();
        assert!(matches!(
            geodesic_distance(&e1, &e3),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn geodesic_distance_two_forms_agree() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let cov = identity(5);
        for _ in 0..10_000 {
            let a = acg_sample(&cov, &mut rng);
            let b = acg_sample(&cov, &mut rng);
            let d1 = geodesic_distance(&a, &b).unwrap();
            let chord = (a.coords() - b.coords()).norm();
            let d2 = 2.0 * (0.5 * chord).asin();
            assert!((d1 - d2).abs() < 1e-10, "{d1} vs {d2}");
        }
    }

    #[test]
    fn metric_equivalence_bounds() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let cov = identity(4);
        for _ in 0..10_000 {
            let a = acg_sample(&cov, &mut rng);
            let b = acg_sample(&cov, &mut rng);
            let chord = (a.coords() - b.coords()).norm();
            let ds = geodesic_distance(&a, &b).unwrap();
            assert!(chord <= ds + 1e-12);
            assert!(ds <= std::f64::consts::FRAC_PI_2 * chord + 1e-12);
        }
    }

    #[test]
    fn acg_identity_is_uniform_on_circle() {
        // KS of the angle distribution against uniform
        let cov = identity(2);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let mut angles: Vec<f64> = (0..n)
            .map(|_| {
                let p = acg_sample(&cov, &mut rng);
                p.coords()[1].atan2(p.coords()[0]) / std::f64::consts::TAU + 0.5
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, a) in angles.iter().enumerate() {
            ks = ks
                .max((a - i as f64 / n as f64).abs())
                .max((a - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn acg_degenerate_concentrates_on_first_axis() {
        let cov = CovarianceModel::diagonal(DVector::from_vec(vec![1.0, 1e-10])).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let p = acg_sample(&cov, &mut rng);
            assert!(p.coords()[0].abs() > 0.999);
        }
    }

    #[test]
    fn acg_sample_matches_independent_oracle() {
        // Direct-sampling oracle with a hand-rolled 3x3 Cholesky factor,
        // compared coordinate-wise via two-sample KS.
        let c = [
            [1.25, 0.33, -1.62],
            [0.33, 0.42, -0.09],
            [-1.62, -0.09, 2.85],
        ];
        // manual Cholesky
        let mut l = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = c[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    l[i][j] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let n = 200_000;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut oracle = vec![Vec::with_capacity(n), Vec::new(), Vec::new()];
        for _ in 0..n {
            let z: [f64; 3] = [
                rand_distr::StandardNormal.sample(&mut rng),
                rand_distr::StandardNormal.sample(&mut rng),
                rand_distr::StandardNormal.sample(&mut rng),
            ];
            let mut x = [0.0f64; 3];
            for i in 0..3 {
                for k in 0..=i {
                    x[i] += l[i][k] * z[k];
                }
            }
            let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            for i in 0..3 {
                oracle[i].push(x[i] / norm);
            }
        }
        let cov = CovarianceModel::dense(DMatrix::from_fn(3, 3, |i, j| c[i][j])).unwrap();
        let mut lib = vec![Vec::with_capacity(n), Vec::new(), Vec::new()];
        for _ in 0..n {
            let p = acg_sample(&cov, &mut rng);
            for i in 0..3 {
                lib[i].push(p.coords()[i]);
            }
        }
        // 1% two-sample threshold: 1.628 * sqrt(2/n)
        let threshold = 1.628 * (2.0 / n as f64).sqrt();
        for i in 0..3 {
            let ks = ks2(&mut oracle[i], &mut lib[i]);
            assert!(ks < threshold, "coordinate {i}: KS = {ks} >= {threshold}");
        }
    }

    #[test]
    fn acg_log_density_uniform_cases() {
        let x2 = SphereVector::new(DVector::from_vec(vec![0.6, 0.8])).unwrap();
        let val2 = acg_log_density(&identity(2), &x2);
        assert!((val2 - (1.0 / std::f64::consts::TAU).ln()).abs() < 1e-12);

        let x3 = SphereVector::anchor(3).unwrap();
        let val3 = acg_log_density(&identity(3), &x3);
        assert!((val3 - (1.0 / (4.0 * std::f64::consts::PI)).ln()).abs() < 1e-12);
    }

    #[test]
    fn acg_log_density_matches_radial_quadrature() {
        // Simpson quadrature of the first-principles radial integral
        //   int_0^infty exp(-r^2 q/2) / sqrt(det 2 pi C) r^{d-1} dr,
        // q = x^T C^{-1} x, for C = diag(4, 1), x = e1.
        let cov = CovarianceModel::diagonal(DVector::from_vec(vec![4.0, 1.0])).unwrap();
        let x = SphereVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let q: f64 = 0.25;
        let det_2pi_c = (std::f64::consts::TAU * 4.0) * (std::f64::consts::TAU * 1.0);
        let integrand = |r: f64| (-0.5 * q * r * r).exp() * r / det_2pi_c.sqrt();
        let (a, b, n) = (0.0, 60.0, 600_000);
        let h = (b - a) / n as f64;
        let mut integral = integrand(a) + integrand(b);
        for k in 1..n {
            integral += integrand(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        integral *= h / 3.0;
        let expect = integral.ln();
        let got = acg_log_density(&cov, &x);
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
    }

    #[test]
    fn acg_density_scale_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for trial in 0..20 {
            // random SPD matrix A A^T + eps I
            let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let c = &a * a.transpose() + DMatrix::identity(3, 3) * 0.2;
            let lambda: f64 = rng.gen_range(0.05..20.0);
            let cov1 = CovarianceModel::dense(c.clone()).unwrap();
            let cov2 = CovarianceModel::dense(c * (lambda * lambda)).unwrap();
            let x = acg_sample(&cov1, &mut rng);
            let d1 = acg_log_density(&cov1, &x);
            let d2 = acg_log_density(&cov2, &x);
            assert!((d1 - d2).abs() < 1e-10, "trial {trial}: {d1} vs {d2}");
        }
    }

    #[test]
    fn acg_density_normalizes_on_circle() {
        // trapezoid over the angle for a non-trivial covariance
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
        let cov = CovarianceModel::dense(c).unwrap();
        let n = 200_000;
        let mut total = 0.0;
        for k in 0..n {
            let theta = k as f64 / n as f64 * std::f64::consts::TAU;
            let x =
                SphereVector::new(DVector::from_vec(vec![theta.cos(), theta.sin()])).unwrap();
            total += acg_log_density(&cov, &x).exp();
        }
        total *= std::f64::consts::TAU / n as f64;
        assert!((total - 1.0).abs() < 1e-6, "integral = {total}");
    }

    #[test]
    fn radial_conditional_chi_squared_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for d in [2usize, 5, 20] {
            let cov = identity(d);
            let x = SphereVector::anchor(d).unwrap();
            let n = 100_000;
            let mean_r2: f64 = (0..n)
                .map(|_| radial_conditional_sample(&cov, &x, &mut rng).powi(2))
                .sum::<f64>()
                / n as f64;
            let se = (2.0 * d as f64 / n as f64).sqrt();
            assert!(
                (mean_r2 - d as f64).abs() < 3.0 * se,
                "d = {d}: mean {mean_r2}"
            );
        }
    }

    #[test]
    fn radial_conditional_anisotropic_mean() {
        // C = diag(4,1), x = e1: R^2 ~ Gamma(1, rate 1/8), mean 8
        let cov = CovarianceModel::diagonal(DVector::from_vec(vec![4.0, 1.0])).unwrap();
        let x = SphereVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let n = 100_000;
        let mean_r2: f64 = (0..n)
            .map(|_| radial_conditional_sample(&cov, &x, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        let se = 8.0 / (n as f64).sqrt();
        assert!((mean_r2 - 8.0).abs() < 3.0 * se, "mean = {mean_r2}");
    }

    #[test]
    fn radial_conditional_ks_against_inverse_cdf_oracle() {
        // (d, rate) pairs from diag covariances chosen to produce the rate
        let cases: [(usize, f64); 3] = [(2, 0.5), (3, 2.0), (10, 1.0)];
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for (d, rate) in cases {
            // C = (1/(2*rate)) I gives x^T C^-1 x / 2 = rate on unit vectors
            let lam = 1.0 / (2.0 * rate);
            let cov = CovarianceModel::diagonal(DVector::from_element(d, lam)).unwrap();
            let x = SphereVector::anchor(d).unwrap();
            let n = 50_000;
            let mut sampled: Vec<f64> = (0..n)
                .map(|_| radial_conditional_sample(&cov, &x, &mut rng).powi(2))
                .collect();
            let oracle_dist = GammaDist::new(d as f64 / 2.0, rate).unwrap();
            let mut oracle: Vec<f64> = (0..n)
                .map(|_| oracle_dist.inverse_cdf(rng.gen_range(0.0..1.0)))
                .collect();
            let ks = ks2(&mut sampled, &mut oracle);
            let threshold = 1.628 * (2.0 / n as f64).sqrt();
            assert!(ks < threshold, "(d={d}, rate={rate}): KS = {ks}");
        }
    }

    #[test]
    fn radial_conditional_ks_against_chi_squared_cdf() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for d in [2usize, 5, 20] {
            let cov = identity(d);
            let x = SphereVector::anchor(d).unwrap();
            let n = 100_000;
            let mut r2: Vec<f64> = (0..n)
                .map(|_| radial_conditional_sample(&cov, &x, &mut rng).powi(2))
                .collect();
            r2.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let chi = ChiSquared::new(d as f64).unwrap();
            let mut ks: f64 = 0.0;
            for (i, v) in r2.iter().enumerate() {
                let f = chi.cdf(*v);
                ks = ks
                    .max((f - i as f64 / n as f64).abs())
                    .max((f - (i + 1) as f64 / n as f64).abs());
            }
            let threshold = 1.628 / (n as f64).sqrt();
            assert!(ks < threshold, "d = {d}: KS = {ks} >= {threshold}");
        }
    }

    #[test]
    fn lift_project_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let cov = identity(2);
        for _ in 0..100 {
            let x = uniform_circle_point(&mut rng);
            let lifted = lift(&x, &cov, &mut rng);
            let back = project_to_sphere(&lifted).unwrap();
            assert!((back.coords() - x.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn lift_of_acg_recovers_gaussian_covariance() {
        // disintegration identity: lifting ACG(C) draws reproduces N(0, C)
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]);
        let cov = CovarianceModel::dense(c.clone()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let n = 100_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let p = acg_sample(&cov, &mut rng);
            let x = lift(&p, &cov, &mut rng);
            acc += &x * x.transpose();
        }
        acc /= n as f64;
        for i in 0..2 {
            for j in 0..2 {
                let se =
                    ((c[(i, i)] * c[(j, j)] + c[(i, j)] * c[(i, j)]) / n as f64).sqrt();
                assert!(
                    (acc[(i, j)] - c[(i, j)]).abs() < 3.0 * se,
                    "({i},{j}): {} vs {}",
                    acc[(i, j)],
                    c[(i, j)]
                );
            }
        }
    }

    #[test]
    fn lift_identity_covariance_chi_squared_moments() {
        let cov = identity(4);
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let n = 100_000;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for _ in 0..n {
            let p = acg_sample(&cov, &mut rng);
            let sq = lift(&p, &cov, &mut rng).norm_squared();
            m1 += sq;
            m2 += sq * sq;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        // chi^2_4: mean 4, second moment d(d+2) = 24
        assert!((m1 - 4.0).abs() < 3.0 * (8.0f64 / n as f64).sqrt());
        let var_m2 = (1920.0f64 - 576.0) / n as f64; // E X^4 - (E X^2)^2 for chi^2_4
        assert!((m2 - 24.0).abs() < 3.0 * var_m2.sqrt().max(0.1));
    }
}
