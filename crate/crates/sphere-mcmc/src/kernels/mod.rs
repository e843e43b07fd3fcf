//! Markov transition kernels: ambient-space pCN-MH and elliptical slice
//! sampling, their reprojected push-forwards on the sphere, the geodesic
//! random-walk and tangent-space MH baselines, and the naive-reprojection
//! negative control.
//!
//! Sphere kernels are pure functions of `(state, rng)`; an optional cached
//! scalar for the current state (each kernel documents its own meaning) lets
//! a chain driver avoid re-evaluating the target between steps.

mod ambient;
mod chain;
mod manifold;
mod naive;
mod reprojected;
mod tune;

pub use ambient::{
    ess_step_ambient, pcn_step_ambient, shrink_ellipse, EssKernel, PcnKernel,
};
pub use chain::{run_ambient_chain, run_chain, AmbientFunctional, Functional};
pub use manifold::{tangent_onb, AcgPosterior, GeodesicWalkMh, TangentMh, UniformDensity};
pub use naive::NaiveReprojection;
pub use reprojected::{ReprojectedEss, ReprojectedPcn};
pub use tune::{tune_step_size, TunedParameter, PILOT_STEPS};

use nalgebra::DVector;
use rand::RngCore;

use crate::error::Result;
use crate::sphere::SphereVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelId {
    PcnAmbient,
    EssAmbient,
    ReproPcn,
    ReproEss,
    GeodesicMh,
    TangentMh,
    NaiveRepro,
    ProjectedWrapper,
}

impl KernelId {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PcnAmbient => "pcn_ambient",
            Self::EssAmbient => "ess_ambient",
            Self::ReproPcn => "repro_pcn",
            Self::ReproEss => "repro_ess",
            Self::GeodesicMh => "geodesic_mh",
            Self::TangentMh => "tangent_mh",
            Self::NaiveRepro => "naive_repro",
            Self::ProjectedWrapper => "projected_wrapper",
        }
    }

    pub fn all() -> &'static [KernelId] {
        &[
            Self::PcnAmbient,
            Self::EssAmbient,
            Self::ReproPcn,
            Self::ReproEss,
            Self::GeodesicMh,
            Self::TangentMh,
            Self::NaiveRepro,
            Self::ProjectedWrapper,
        ]
    }
}

impl std::str::FromStr for KernelId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::all()
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| {
                let valid: Vec<&str> = Self::all().iter().map(|k| k.as_str()).collect();
                format!("unknown kernel id `{s}`; valid ids: {}", valid.join(", "))
            })
    }
}

impl std::fmt::Display for KernelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Negative log-likelihood on the sphere.
pub trait SpherePotential {
    fn evaluate(&self, x: &SphereVector) -> f64;
}

impl<F: Fn(&SphereVector) -> f64> SpherePotential for F {
    fn evaluate(&self, x: &SphereVector) -> f64 {
        self(x)
    }
}

/// Unnormalized log density with respect to the surface (Hausdorff) measure,
/// used by the manifold random-walk kernels.
pub trait SurfaceLogDensity {
    fn log_density(&self, x: &SphereVector) -> f64;
}

impl<F: Fn(&SphereVector) -> f64> SurfaceLogDensity for F {
    fn log_density(&self, x: &SphereVector) -> f64 {
        self(x)
    }
}

/// Outcome of one sphere-kernel transition.
#[derive(Debug, Clone)]
pub struct KernelStep {
    pub next: SphereVector,
    /// MH kernels: whether the proposal was taken. Slice kernels always move
    /// and report `true`.
    pub accepted: bool,
    pub proposal: Option<SphereVector>,
    /// Number of target evaluations inside the shrinkage loop, for slice
    /// kernels.
    pub shrink_tries: Option<u32>,
    /// Geodesic distance between the current and next state (0 on rejection).
    pub jump_distance: f64,
    /// Kernel-specific cached scalar for `next` (potential or log density),
    /// to be passed back in on the following step.
    pub state_cache: Option<f64>,
}

/// One-step sampler on the sphere.
pub trait SphereKernel {
    /// Performs one transition. `state_cache` must be either `None` or the
    /// `state_cache` value returned by the previous step of this same kernel.
    fn step(
        &self,
        state: &SphereVector,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep>;

    fn id(&self) -> KernelId;

    /// Kernels that are deliberately not target-invariant (negative
    /// controls); the harness refuses to treat them as valid samplers.
    fn is_negative_control(&self) -> bool {
        false
    }
}

/// Outcome of one ambient-space transition.
#[derive(Debug, Clone)]
pub struct AmbientKernelStep {
    pub next: DVector<f64>,
    pub accepted: bool,
    pub shrink_tries: Option<u32>,
    /// Cached potential of `next`.
    pub state_cache: Option<f64>,
}

/// One-step sampler on the ambient space R^d.
pub trait AmbientKernel {
    fn step(
        &self,
        state: &DVector<f64>,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<AmbientKernelStep>;

    fn id(&self) -> KernelId;
}
