//! Ambient-space samplers targeting dnu/dnu0 = exp(-Phi) with nu0 = N(0, C):
//! the pCN-MH kernel and the elliptical slice sampler. Acceptance ratios and
//! slice levels are handled in log space throughout.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;

use super::{AmbientKernel, AmbientKernelStep, KernelId};

/// Hard cap on shrinkage iterations; unreachable when the level respects
/// `log_level <= -phi(x)` because the bracket shrinks onto theta = 0.
const MAX_SHRINK_TRIES: u32 = 1_000_000;

/// One pCN-MH transition from `x`: propose
/// `y = sqrt(1 - s^2) x + s w` with `w ~ N(0, C)` and accept with probability
/// `min(1, exp(phi(x) - phi(y)))`.
pub fn pcn_step_ambient(
    x: &DVector<f64>,
    cov: &CovarianceModel,
    step_size: f64,
    phi: impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<AmbientKernelStep> {
    pcn_step_cached(x, None, cov, step_size, &phi, rng)
}

fn pcn_step_cached(
    x: &DVector<f64>,
    phi_x: Option<f64>,
    cov: &CovarianceModel,
    step_size: f64,
    phi: &impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<AmbientKernelStep> {
    if !(step_size > 0.0 && step_size <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "step_size",
            reason: format!("pCN step size must lie in (0, 1], got {step_size}"),
        });
    }
    let w = cov.sample(rng);
    let y = x * (1.0 - step_size * step_size).sqrt() + w * step_size;
    let phi_x = phi_x.unwrap_or_else(|| phi(x));
    let phi_y = phi(&y);
    let log_alpha = phi_x - phi_y;
    let accepted = log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha;
    Ok(if accepted {
        AmbientKernelStep {
            next: y,
            accepted: true,
            shrink_tries: None,
            state_cache: Some(phi_y),
        }
    } else {
        AmbientKernelStep {
            next: x.clone(),
            accepted: false,
            shrink_tries: None,
            state_cache: Some(phi_x),
        }
    })
}

/// Walks the ellipse `cos(theta) x + sin(theta) w` until the super-level-set
/// constraint `-phi(y) >= log_level` holds, shrinking the angle bracket
/// towards 0 on every failure. Returns the accepted point and the number of
/// `phi` evaluations. Requires `log_level <= -phi(x)` for termination.
pub fn shrink_ellipse(
    x: &DVector<f64>,
    log_level: f64,
    cov: &CovarianceModel,
    phi: impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<(DVector<f64>, u32)> {
    let (y, tries, _) = shrink_ellipse_with_value(x, log_level, cov, &phi, rng)?;
    Ok((y, tries))
}

pub(crate) fn shrink_ellipse_with_value(
    x: &DVector<f64>,
    log_level: f64,
    cov: &CovarianceModel,
    phi: &impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<(DVector<f64>, u32, f64)> {
    let w = cov.sample(rng);
    let mut theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    let mut theta_min = theta - std::f64::consts::TAU;
    let mut theta_max = theta;
    let mut tries = 0u32;
    loop {
        let y = x * theta.cos() + &w * theta.sin();
        let phi_y = phi(&y);
        tries += 1;
        if -phi_y >= log_level {
            return Ok((y, tries, phi_y));
        }
        if tries >= MAX_SHRINK_TRIES {
            return Err(Error::ShrinkageStalled(tries));
        }
        if theta < 0.0 {
            theta_min = theta;
        } else {
            theta_max = theta;
        }
        theta = theta_min + rng.gen::<f64>() * (theta_max - theta_min);
    }
}

/// One elliptical-slice transition: draw the level
/// `t ~ U(0, exp(-phi(x))]` (as `log t = log u - phi(x)` with `u` in (0, 1])
/// and run the shrinkage walk. The kernel always moves.
pub fn ess_step_ambient(
    x: &DVector<f64>,
    cov: &CovarianceModel,
    phi: impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<AmbientKernelStep> {
    ess_step_cached(x, None, cov, &phi, rng)
}

fn ess_step_cached(
    x: &DVector<f64>,
    phi_x: Option<f64>,
    cov: &CovarianceModel,
    phi: &impl Fn(&DVector<f64>) -> f64,
    rng: &mut dyn RngCore,
) -> Result<AmbientKernelStep> {
    let phi_x = phi_x.unwrap_or_else(|| phi(x));
    let u = 1.0 - rng.gen::<f64>(); // (0, 1]
    let log_level = u.ln() - phi_x;
    let (y, tries, phi_y) = shrink_ellipse_with_value(x, log_level, cov, phi, rng)?;
    Ok(AmbientKernelStep {
        next: y,
        accepted: true,
        shrink_tries: Some(tries),
        state_cache: Some(phi_y),
    })
}

/// pCN-MH as a reusable ambient kernel.
pub struct PcnKernel<F> {
    cov: Arc<CovarianceModel>,
    step_size: f64,
    phi: F,
}

impl<F: Fn(&DVector<f64>) -> f64> PcnKernel<F> {
    pub fn new(cov: Arc<CovarianceModel>, step_size: f64, phi: F) -> Result<Self> {
        if !(step_size > 0.0 && step_size <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("pCN step size must lie in (0, 1], got {step_size}"),
            });
        }
        Ok(Self {
            cov,
            step_size,
            phi,
        })
    }
}

impl<F: Fn(&DVector<f64>) -> f64> AmbientKernel for PcnKernel<F> {
    fn step(
        &self,
        state: &DVector<f64>,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<AmbientKernelStep> {
        pcn_step_cached(state, state_cache, &self.cov, self.step_size, &self.phi, rng)
    }

    fn id(&self) -> KernelId {
        KernelId::PcnAmbient
    }
}

/// Elliptical slice sampling as a reusable ambient kernel.
pub struct EssKernel<F> {
    cov: Arc<CovarianceModel>,
    phi: F,
}

impl<F: Fn(&DVector<f64>) -> f64> EssKernel<F> {
    pub fn new(cov: Arc<CovarianceModel>, phi: F) -> Self {
        Self { cov, phi }
    }
}

impl<F: Fn(&DVector<f64>) -> f64> AmbientKernel for EssKernel<F> {
    fn step(
        &self,
        state: &DVector<f64>,
        state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<AmbientKernelStep> {
        ess_step_cached(state, state_cache, &self.cov, &self.phi, rng)
    }

    fn id(&self) -> KernelId {
        KernelId::EssAmbient
    }
}
