//! Reprojected samplers: push-forwards of the ambient pCN-MH and elliptical
//! slice kernels under the radial projection. Each step lifts the sphere
//! point along its ray using the exact Gamma radial law, moves in the
//! ambient space, and projects back. The resulting chains are reversible for
//! the ACG-prior posterior on the sphere.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::sphere::{geodesic_distance, lift, project_to_sphere, SphereVector};

use super::ambient::shrink_ellipse_with_value;
use super::{KernelId, KernelStep, SphereKernel, SpherePotential};

/// Reprojected pCN-MH on the sphere. `state_cache` carries the potential of
/// the current state.
pub struct ReprojectedPcn<P> {
    cov: Arc<CovarianceModel>,
    step_size: f64,
    potential: P,
}

impl<P: SpherePotential> ReprojectedPcn<P> {
    pub fn new(cov: Arc<CovarianceModel>, step_size: f64, potential: P) -> Result<Self> {
        if !(step_size > 0.0 && step_size <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("pCN step size must lie in (0, 1], got {step_size}"),
            });
        }
        Ok(Self {
            cov,
            step_size,
            potential,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }
}

impl<P: SpherePotential> SphereKernel for ReprojectedPcn<P> {
    fn step(
        &self,
        state: &SphereVector,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep> {
        let phi_x = state_cache.unwrap_or_else(|| self.potential.evaluate(state));
        let ambient = lift(state, &self.cov, rng);
        let w = self.cov.sample(rng);
        let s = self.step_size;
        let y = ambient * (1.0 - s * s).sqrt() + w * s;
        let proposal = project_to_sphere(&y)?;
        let phi_y = self.potential.evaluate(&proposal);
        let log_alpha = phi_x - phi_y;
        let accepted = log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha;
        Ok(if accepted {
            KernelStep {
                jump_distance: geodesic_distance(state, &proposal)?,
                next: proposal.clone(),
                accepted: true,
                proposal: Some(proposal),
                shrink_tries: None,
                state_cache: Some(phi_y),
            }
        } else {
            KernelStep {
                next: state.clone(),
                accepted: false,
                proposal: Some(proposal),
                shrink_tries: None,
                jump_distance: 0.0,
                state_cache: Some(phi_x),
            }
        })
    }

    fn id(&self) -> KernelId {
        KernelId::ReproPcn
    }
}

/// Reprojected elliptical slice sampler on the sphere. `state_cache`
/// carries the potential of the current state. Every step moves; the
/// shrinkage walk runs against the lifted potential `phi = potential o
/// projection`, so the returned state always satisfies the drawn level.
pub struct ReprojectedEss<P> {
    cov: Arc<CovarianceModel>,
    potential: P,
}

impl<P: SpherePotential> ReprojectedEss<P> {
    pub fn new(cov: Arc<CovarianceModel>, potential: P) -> Self {
        Self { cov, potential }
    }
}

impl<P: SpherePotential> SphereKernel for ReprojectedEss<P> {
    fn step(
        &self,
        state: &SphereVector,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep> {
        let phi_x = state_cache.unwrap_or_else(|| self.potential.evaluate(state));
        let u = 1.0 - rng.gen::<f64>(); // (0, 1]
        let log_level = u.ln() - phi_x;
        let ambient = lift(state, &self.cov, rng);
        let lifted_phi = |v: &nalgebra::DVector<f64>| {
            self.potential
                .evaluate(&project_to_sphere(v).expect("dimension fixed by state"))
        };
        let (y, tries, phi_y) =
            shrink_ellipse_with_value(&ambient, log_level, &self.cov, &lifted_phi, rng)?;
        let next = project_to_sphere(&y)?;
        Ok(KernelStep {
            jump_distance: geodesic_distance(state, &next)?,
            next,
            accepted: true,
            proposal: None,
            shrink_tries: Some(tries),
            state_cache: Some(phi_y),
        })
    }

    fn id(&self) -> KernelId {
        KernelId::ReproEss
    }
}
