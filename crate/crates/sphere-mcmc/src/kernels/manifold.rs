//! Random-walk MH baselines that live on the sphere itself and target an
//! unnormalized density with respect to the surface measure: the geodesic
//! random walk and the tangent-space MH scheme of Zappa-style projections.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::sphere::{geodesic_distance, project_to_sphere, SphereVector};

use super::{KernelId, KernelStep, SphereKernel, SpherePotential, SurfaceLogDensity};

/// Orthonormal basis of the tangent space at `x` (the orthogonal complement
/// of `x`), as the trailing d-1 columns of the Householder reflection taking
/// `x` to a signed first basis vector.
pub fn tangent_onb(x: &SphereVector) -> DMatrix<f64> {
    let d = x.dim();
    let mut u = x.coords().clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let factor = 2.0 / u.norm_squared();
    DMatrix::from_fn(d, d - 1, |i, j| {
        let col = j + 1;
        let eye = if i == col { 1.0 } else { 0.0 };
        eye - factor * u[i] * u[col]
    })
}

/// Posterior density exp(-potential(x)) / |x|_C^d with respect to the
/// surface measure, in log form (additive constants dropped).
pub struct AcgPosterior<P> {
    cov: Arc<CovarianceModel>,
    potential: P,
}

impl<P: SpherePotential> AcgPosterior<P> {
    pub fn new(cov: Arc<CovarianceModel>, potential: P) -> Self {
        Self { cov, potential }
    }
}

impl<P: SpherePotential> SurfaceLogDensity for AcgPosterior<P> {
    fn log_density(&self, x: &SphereVector) -> f64 {
        let d = x.dim() as f64;
        let quad = self.cov.precision_quadratic(x.coords());
        -self.potential.evaluate(x) - 0.5 * d * quad.ln()
    }
}

/// The uniform surface density.
pub struct UniformDensity;

impl SurfaceLogDensity for UniformDensity {
    fn log_density(&self, _x: &SphereVector) -> f64 {
        0.0
    }
}

fn random_unit_tangent(basis: &DMatrix<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
    let m = basis.ncols();
    loop {
        let w: DVector<f64> = DVector::from_iterator(
            m,
            (0..m).map(|_| -> f64 { StandardNormal.sample(&mut *rng) }),
        );
        let norm = w.norm();
        if norm > 1e-12 {
            return basis * (w / norm);
        }
    }
}

/// Geodesic random-walk MH: propose `cos(t) x + sin(t) v` with `v` uniform
/// on the unit sphere of the tangent space, accept by the density ratio.
/// `state_cache` carries the log density of the current state.
pub struct GeodesicWalkMh<D> {
    step_angle: f64,
    density: D,
}

impl<D: SurfaceLogDensity> GeodesicWalkMh<D> {
    pub fn new(step_angle: f64, density: D) -> Result<Self> {
        if !(step_angle > 0.0 && step_angle <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "step_angle",
                reason: format!("geodesic step must lie in (0, pi/2], got {step_angle}"),
            });
        }
        Ok(Self {
            step_angle,
            density,
        })
    }

    pub fn step_angle(&self) -> f64 {
        self.step_angle
    }
}

impl<D: SurfaceLogDensity> SphereKernel for GeodesicWalkMh<D> {
    fn step(
        &self,
        state: &SphereVector,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep> {
        let log_rho_x = state_cache.unwrap_or_else(|| self.density.log_density(state));
        let basis = tangent_onb(state);
        let v = random_unit_tangent(&basis, rng);
        let t = self.step_angle;
        let proposal = project_to_sphere(&(state.coords() * t.cos() + v * t.sin()))?;
        let log_rho_y = self.density.log_density(&proposal);
        let log_alpha = log_rho_y - log_rho_x;
        let accepted = log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha;
        Ok(if accepted {
            KernelStep {
                jump_distance: geodesic_distance(state, &proposal)?,
                next: proposal.clone(),
                accepted: true,
                proposal: Some(proposal),
                shrink_tries: None,
                state_cache: Some(log_rho_y),
            }
        } else {
            KernelStep {
                next: state.clone(),
                accepted: false,
                proposal: Some(proposal),
                shrink_tries: None,
                jump_distance: 0.0,
                state_cache: Some(log_rho_x),
            }
        })
    }

    fn id(&self) -> KernelId {
        KernelId::GeodesicMh
    }
}

/// Tangent-space MH: draw `v = U w` with `w ~ N(0, s^2 I_{d-1})`; when
/// `|v| > 1` the move cannot be projected back and the chain stays put,
/// otherwise propose `sqrt(1 - |v|^2) x + v`. The tangent proposal densities
/// of the forward and reverse moves cancel, leaving the plain density ratio.
/// `state_cache` carries the log density of the current state.
pub struct TangentMh<D> {
    step_size: f64,
    density: D,
}

impl<D: SurfaceLogDensity> TangentMh<D> {
    pub fn new(step_size: f64, density: D) -> Result<Self> {
        if !(step_size > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("tangent step size must be positive, got {step_size}"),
            });
        }
        Ok(Self { step_size, density })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }
}

impl<D: SurfaceLogDensity> SphereKernel for TangentMh<D> {
    fn step(
        &self,
        state: &SphereVector,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep> {
        let log_rho_x = state_cache.unwrap_or_else(|| self.density.log_density(state));
        let basis = tangent_onb(state);
        let m = basis.ncols();
        let w: DVector<f64> = DVector::from_iterator(
            m,
            (0..m).map(|_| -> f64 {
                let z: f64 = StandardNormal.sample(&mut *rng);
                self.step_size * z
            }),
        );
        let v = basis * w;
        let v_sq = v.norm_squared();
        if v_sq > 1.0 {
            return Ok(KernelStep {
                next: state.clone(),
                accepted: false,
                proposal: None,
                shrink_tries: None,
                jump_distance: 0.0,
                state_cache: Some(log_rho_x),
            });
        }
        let proposal =
            project_to_sphere(&(state.coords() * (1.0 - v_sq).sqrt() + v))?;
        let log_rho_y = self.density.log_density(&proposal);
        let log_alpha = log_rho_y - log_rho_x;
        let accepted = log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha;
        Ok(if accepted {
            KernelStep {
                jump_distance: geodesic_distance(state, &proposal)?,
                next: proposal.clone(),
                accepted: true,
                proposal: Some(proposal),
                shrink_tries: None,
                state_cache: Some(log_rho_y),
            }
        } else {
            KernelStep {
                next: state.clone(),
                accepted: false,
                proposal: Some(proposal),
                shrink_tries: None,
                jump_distance: 0.0,
                state_cache: Some(log_rho_x),
            }
        })
    }

    fn id(&self) -> KernelId {
        KernelId::TangentMh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    use crate::sphere::acg_sample;

    fn identity(d: usize) -> Arc<CovarianceModel> {
        Arc::new(CovarianceModel::dense(DMatrix::identity(d, d)).unwrap())
    }

    #[test]
    fn tangent_onb_projector_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for d in [2usize, 3, 7, 25] {
            let cov = identity(d);
            for _ in 0..20 {
                let x = acg_sample(&cov, &mut rng);
                let u = tangent_onb(&x);
                // U^T x = 0
                let ux = u.transpose() * x.coords();
                assert!(ux.amax() < 1e-10, "d = {d}: U^T x = {}", ux.amax());
                // U^T U = I
                let gram = u.transpose() * &u;
                for i in 0..d - 1 {
                    for j in 0..d - 1 {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((gram[(i, j)] - expect).abs() < 1e-10);
                    }
                }
                // U U^T = I - x x^T
                let proj = &u * u.transpose();
                for i in 0..d {
                    for j in 0..d {
                        let expect = (if i == j { 1.0 } else { 0.0 })
                            - x.coords()[i] * x.coords()[j];
                        assert!((proj[(i, j)] - expect).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn tangent_onb_axis_aligned_case() {
        let x = SphereVector::new(DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let u = tangent_onb(&x);
        // span{e2, e3}: projector must be diag(0, 1, 1)
        let proj = &u * u.transpose();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((proj - expect).amax() < 1e-12);
    }

    #[test]
    fn tangent_onb_circle_is_rotation_by_quarter_turn() {
        let a: f64 = 0.73;
        let x = SphereVector::new(DVector::from_vec(vec![a.cos(), a.sin()])).unwrap();
        let u = tangent_onb(&x);
        assert_eq!(u.ncols(), 1);
        let col = u.column(0);
        let plus = (col[0] + a.sin()).abs() < 1e-12 && (col[1] - a.cos()).abs() < 1e-12;
        let minus = (col[0] - a.sin()).abs() < 1e-12 && (col[1] + a.cos()).abs() < 1e-12;
        assert!(plus || minus, "column = ({}, {})", col[0], col[1]);
    }

    #[test]
    fn geodesic_proposal_lies_at_exact_distance() {
        let cov = identity(4);
        let t = 0.37;
        let kernel = GeodesicWalkMh::new(t, UniformDensity).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x = acg_sample(&cov, &mut rng);
            let step = kernel.step(&x, None, &mut rng).unwrap();
            let prop = step.proposal.unwrap();
            assert!((prop.coords().norm() - 1.0).abs() < 1e-12);
            let dist = geodesic_distance(&x, &prop).unwrap();
            assert!((dist - t).abs() < 1e-10, "distance {dist} vs step {t}");
        }
    }

    #[test]
    fn geodesic_uniform_density_always_accepts() {
        let cov = identity(3);
        let kernel = GeodesicWalkMh::new(0.5, UniformDensity).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut x = acg_sample(&cov, &mut rng);
        for _ in 0..200 {
            let step = kernel.step(&x, None, &mut rng).unwrap();
            assert!(step.accepted);
            x = step.next;
        }
    }

    #[test]
    fn geodesic_rejects_out_of_range_step() {
        assert!(GeodesicWalkMh::new(0.0, UniformDensity).is_err());
        assert!(GeodesicWalkMh::new(2.0, UniformDensity).is_err());
    }

    #[test]
    fn geodesic_uniform_stationary_on_circle() {
        // chain from uniform start stays uniform: KS on the angle
        let kernel = GeodesicWalkMh::new(0.8, UniformDensity).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let cov = identity(2);
        let mut x = acg_sample(&cov, &mut rng);
        let n = 50_000;
        let mut angles = Vec::with_capacity(n);
        let mut cache = None;
        for _ in 0..n {
            let step = kernel.step(&x, cache, &mut rng).unwrap();
            cache = step.state_cache;
            x = step.next;
            angles.push(x.coords()[1].atan2(x.coords()[0]) / std::f64::consts::TAU + 0.5);
        }
        angles.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut ks: f64 = 0.0;
        for (i, a) in angles.iter().enumerate() {
            ks = ks
                .max((a - i as f64 / n as f64).abs())
                .max((a - (i + 1) as f64 / n as f64).abs());
        }
        // the chain mixes fast at t = 0.8; allow a generous multiple of the
        // i.i.d. 1% threshold for autocorrelation
        assert!(ks < 3.0 * 1.628 / (n as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn tangent_overlong_move_is_immediate_rejection() {
        // enormous step size: |v| > 1 almost surely
        let kernel = TangentMh::new(50.0, UniformDensity).unwrap();
        let cov = identity(3);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let x = acg_sample(&cov, &mut rng);
        let mut rejected = 0;
        for _ in 0..100 {
            let step = kernel.step(&x, None, &mut rng).unwrap();
            if !step.accepted {
                assert_eq!(step.next, x);
                assert!(step.proposal.is_none());
                rejected += 1;
            }
        }
        assert!(rejected > 90);
    }

    #[test]
    fn tangent_small_step_high_acceptance_uniform() {
        let kernel = TangentMh::new(0.05, UniformDensity).unwrap();
        let cov = identity(2);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut x = acg_sample(&cov, &mut rng);
        let mut accepted = 0;
        let n = 2000;
        let mut cache = None;
        for _ in 0..n {
            let step = kernel.step(&x, cache, &mut rng).unwrap();
            if step.accepted {
                accepted += 1;
            }
            cache = step.state_cache;
            x = step.next;
        }
        assert!(accepted as f64 / n as f64 > 0.99);
    }

    #[test]
    fn tangent_uniform_stationary_on_circle() {
        let kernel = TangentMh::new(0.6, UniformDensity).unwrap();
        let cov = identity(2);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut x = acg_sample(&cov, &mut rng);
        let n = 50_000;
        let mut angles = Vec::with_capacity(n);
        let mut cache = None;
        for _ in 0..n {
            let step = kernel.step(&x, cache, &mut rng).unwrap();
            cache = step.state_cache;
            x = step.next;
            angles.push(x.coords()[1].atan2(x.coords()[0]) / std::f64::consts::TAU + 0.5);
        }
        angles.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut ks: f64 = 0.0;
        for (i, a) in angles.iter().enumerate() {
            ks = ks
                .max((a - i as f64 / n as f64).abs())
                .max((a - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 4.0 * 1.628 / (n as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn acg_posterior_density_ratio_matches_quadratic_forms() {
        let cov = Arc::new(
            CovarianceModel::diagonal(DVector::from_vec(vec![4.0, 1.0])).unwrap(),
        );
        let density = AcgPosterior::new(cov.clone(), |_: &SphereVector| 0.0);
        let e1 = SphereVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let e2 = SphereVector::new(DVector::from_vec(vec![0.0, 1.0])).unwrap();
        // rho(e1)/rho(e2) = (q(e2)/q(e1))^{d/2} = (1 / 0.25)^1 = 4
        let ratio = (density.log_density(&e1) - density.log_density(&e2)).exp();
        assert!((ratio - 4.0).abs() < 1e-12);
    }
}
