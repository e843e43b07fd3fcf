//! Acceptance-rate tuning by bisection on the log of the step parameter,
//! assuming the measured rate decreases in the parameter.

use rand::RngCore;

use crate::error::Result;
use crate::sphere::SphereVector;

use super::SphereKernel;

/// Pilot run length per bisection round.
pub const PILOT_STEPS: usize = 5_000;
const MAX_ROUNDS: usize = 20;
const RATE_TOL: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct TunedParameter {
    pub value: f64,
    pub measured_rate: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

fn pilot_rate(
    kernel: &dyn SphereKernel,
    initial: &SphereVector,
    steps: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut x = initial.clone();
    let mut cache = None;
    let mut accepted = 0usize;
    for _ in 0..steps {
        let step = kernel.step(&x, cache, rng)?;
        if step.accepted {
            accepted += 1;
        }
        cache = step.state_cache;
        x = step.next;
    }
    Ok(accepted as f64 / steps as f64)
}

/// Tunes a one-parameter kernel family to a target acceptance rate. `build`
/// constructs the kernel for a candidate parameter; `bounds` bracket the
/// admissible range. Bisection runs on the log of the parameter with pilot
/// runs of [`PILOT_STEPS`] steps, stopping inside `target +- 0.02` or after
/// 20 rounds (then the last parameter is returned, flagged unconverged).
/// A family whose rate at the upper bound still exceeds the target (a flat
/// response, e.g. a constant potential) returns the bound with a warning.
pub fn tune_step_size(
    build: &dyn Fn(f64) -> Result<Box<dyn SphereKernel>>,
    bounds: (f64, f64),
    target_rate: f64,
    initial: &SphereVector,
    rng: &mut dyn RngCore,
) -> Result<TunedParameter> {
    assert!(
        target_rate > 0.0 && target_rate < 1.0,
        "target rate must lie in (0, 1)"
    );
    let (mut lo, mut hi) = bounds;
    assert!(lo > 0.0 && hi > lo, "invalid parameter bounds");
    let rate_hi = pilot_rate(build(hi)?.as_ref(), initial, PILOT_STEPS, rng)?;
    if rate_hi >= target_rate {
        return Ok(TunedParameter {
            value: hi,
            measured_rate: rate_hi,
            converged: false,
            warning: Some(format!(
                "acceptance rate {rate_hi:.3} at the maximal parameter {hi} never \
                 drops to the target {target_rate:.3}; returning the bound"
            )),
        });
    }
    let mut value = hi;
    let mut rate = rate_hi;
    for _ in 0..MAX_ROUNDS {
        value = (lo * hi).sqrt();
        rate = pilot_rate(build(value)?.as_ref(), initial, PILOT_STEPS, rng)?;
        if (rate - target_rate).abs() <= RATE_TOL {
            return Ok(TunedParameter {
                value,
                measured_rate: rate,
                converged: true,
                warning: None,
            });
        }
        if rate > target_rate {
            lo = value;
        } else {
            hi = value;
        }
    }
    Ok(TunedParameter {
        value,
        measured_rate: rate,
        converged: false,
        warning: Some(format!(
            "bisection did not reach {target_rate:.3} +- {RATE_TOL} in {MAX_ROUNDS} \
             rounds; last rate {rate:.3}"
        )),
    })
}
