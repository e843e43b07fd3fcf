//! Chain drivers: iterate a kernel, discard burn-in, record functionals and
//! step metadata. Deterministic given the RNG stream.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::RngCore;

use crate::diagnostics::ChainTrace;
use crate::error::{Error, Result};
use crate::sphere::SphereVector;

use super::{AmbientKernel, SphereKernel};

/// A named scalar functional of the state, recorded at every kept step.
pub struct Functional {
    pub name: String,
    pub eval: Box<dyn Fn(&SphereVector) -> f64 + Send + Sync>,
}

impl Functional {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&SphereVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    /// The i-th coordinate.
    pub fn coordinate(i: usize) -> Self {
        Self::new(format!("x{i}"), move |x: &SphereVector| x.coords()[i])
    }
}

/// Runs `iterations` steps of a sphere kernel from `initial`, discards the
/// first `burn_in`, and records functional values, acceptance counts,
/// shrinkage totals and geodesic jump distances for the remainder. States
/// are stored every `store_states_every` kept steps when requested.
/// A non-finite functional value aborts the run with a state dump.
pub fn run_chain(
    kernel: &dyn SphereKernel,
    initial: &SphereVector,
    iterations: usize,
    burn_in: usize,
    functionals: &[Functional],
    store_states_every: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<ChainTrace> {
    if iterations <= burn_in {
        return Err(Error::InvalidParameter {
            name: "iterations",
            reason: format!("iterations ({iterations}) must exceed burn_in ({burn_in})"),
        });
    }
    let mut series: BTreeMap<String, Vec<f64>> = functionals
        .iter()
        .map(|f| (f.name.clone(), Vec::with_capacity(iterations - burn_in)))
        .collect();
    let mut states = store_states_every.map(|_| Vec::new());
    let mut x = initial.clone();
    let mut cache = None;
    let mut accepted = 0usize;
    let mut shrink_total = 0u64;
    let mut shrink_steps = 0usize;
    let mut jumps = Vec::with_capacity(iterations - burn_in);
    for step_index in 0..iterations {
        let step = kernel.step(&x, cache, rng)?;
        cache = step.state_cache;
        x = step.next;
        if step_index < burn_in {
            continue;
        }
        let kept_index = step_index - burn_in;
        if step.accepted {
            accepted += 1;
        }
        if let Some(tries) = step.shrink_tries {
            shrink_total += u64::from(tries);
            shrink_steps += 1;
        }
        jumps.push(step.jump_distance);
        for f in functionals {
            let value = (f.eval)(&x);
            if !value.is_finite() {
                return Err(Error::NonFiniteFunctional {
                    name: f.name.clone(),
                    step: step_index,
                    state: x.coords().iter().cloned().collect(),
                });
            }
            series.get_mut(&f.name).expect("series pre-inserted").push(value);
        }
        if let (Some(stored), Some(every)) = (&mut states, store_states_every) {
            if kept_index % every == 0 {
                stored.push(x.coords().clone());
            }
        }
    }
    Ok(ChainTrace {
        kernel_id: kernel.id(),
        dimension: initial.dim(),
        seed: None,
        tuning: None,
        functional_series: series,
        states,
        accepted_count: accepted,
        step_count: iterations - burn_in,
        shrink_tries_total: shrink_total,
        shrink_steps,
        jump_distances: jumps,
    })
}

/// A named scalar functional of a raw ambient state.
pub struct AmbientFunctional {
    pub name: String,
    pub eval: Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
}

impl AmbientFunctional {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    /// The i-th coordinate of the ambient state.
    pub fn coordinate(i: usize) -> Self {
        Self::new(format!("x{i}"), move |x: &DVector<f64>| x[i])
    }

    /// Composes a sphere functional with the radial projection, which is how
    /// the projected (generally non-Markov) trace of an ambient chain is
    /// recorded. The resulting trace is labelled by the caller, typically as
    /// `KernelId::ProjectedWrapper`.
    pub fn projected(inner: Functional) -> Self {
        Self {
            name: inner.name,
            eval: Box::new(move |x: &DVector<f64>| {
                let projected = crate::sphere::project_to_sphere(x)
                    .expect("ambient states have the chain dimension");
                (inner.eval)(&projected)
            }),
        }
    }
}

/// Ambient-space counterpart of [`run_chain`]; functionals act on the raw
/// ambient state and jump distances are Euclidean.
pub fn run_ambient_chain(
    kernel: &dyn AmbientKernel,
    initial: &DVector<f64>,
    iterations: usize,
    burn_in: usize,
    functionals: &[AmbientFunctional],
    rng: &mut dyn RngCore,
) -> Result<ChainTrace> {
    if iterations <= burn_in {
        return Err(Error::InvalidParameter {
            name: "iterations",
            reason: format!("iterations ({iterations}) must exceed burn_in ({burn_in})"),
        });
    }
    let mut series: BTreeMap<String, Vec<f64>> = functionals
        .iter()
        .map(|f| (f.name.clone(), Vec::with_capacity(iterations - burn_in)))
        .collect();
    let mut x = initial.clone();
    let mut cache = None;
    let mut accepted = 0usize;
    let mut shrink_total = 0u64;
    let mut shrink_steps = 0usize;
    let mut jumps = Vec::with_capacity(iterations - burn_in);
    for step_index in 0..iterations {
        let step = kernel.step(&x, cache, rng)?;
        let jump = (&step.next - &x).norm();
        cache = step.state_cache;
        x = step.next;
        if step_index < burn_in {
            continue;
        }
        if step.accepted {
            accepted += 1;
        }
        if let Some(tries) = step.shrink_tries {
            shrink_total += u64::from(tries);
            shrink_steps += 1;
        }
        jumps.push(jump);
        for f in functionals {
            let value = (f.eval)(&x);
            if !value.is_finite() {
                return Err(Error::NonFiniteFunctional {
                    name: f.name.clone(),
                    step: step_index,
                    state: x.iter().cloned().collect(),
                });
            }
            series.get_mut(&f.name).expect("series pre-inserted").push(value);
        }
    }
    Ok(ChainTrace {
        kernel_id: kernel.id(),
        dimension: initial.len(),
        seed: None,
        tuning: None,
        functional_series: series,
        states: None,
        accepted_count: accepted,
        step_count: iterations - burn_in,
        shrink_tries_total: shrink_total,
        shrink_steps,
        jump_distances: jumps,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    use super::*;
    use crate::error::Error;
    use crate::gaussian::CovarianceModel;
    use crate::kernels::{KernelId, KernelStep, ReprojectedPcn};
    use crate::sphere::acg_sample;

    struct IdentitySphereKernel;

    impl SphereKernel for IdentitySphereKernel {
        fn step(
            &self,
            state: &SphereVector,
            _cache: Option<f64>,
            _rng: &mut dyn RngCore,
        ) -> Result<KernelStep> {
            Ok(KernelStep {
                next: state.clone(),
                accepted: true,
                proposal: None,
                shrink_tries: None,
                jump_distance: 0.0,
                state_cache: None,
            })
        }

        fn id(&self) -> KernelId {
            KernelId::ReproPcn
        }
    }

    #[test]
    fn identity_kernel_gives_constant_trace() {
        let x0 = SphereVector::anchor(3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let trace = run_chain(
            &IdentitySphereKernel,
            &x0,
            300,
            100,
            &[Functional::coordinate(2)],
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(trace.step_count, 200);
        let series = &trace.functional_series["x2"];
        assert_eq!(series.len(), 200);
        assert!(series.iter().all(|&v| v == 1.0));
        assert_eq!(trace.rmsjd(), 0.0);
        assert_eq!(trace.acceptance_rate(), 1.0);
    }

    #[test]
    fn burn_in_must_be_less_than_iterations() {
        let x0 = SphereVector::anchor(2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let result = run_chain(&IdentitySphereKernel, &x0, 100, 100, &[], None, &mut rng);
        assert!(matches!(result, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn non_finite_functional_aborts_with_state() {
        let x0 = SphereVector::anchor(2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let bad = Functional::new("bad", |_: &SphereVector| f64::NAN);
        let result = run_chain(&IdentitySphereKernel, &x0, 10, 0, &[bad], None, &mut rng);
        match result {
            Err(Error::NonFiniteFunctional { name, state, .. }) => {
                assert_eq!(name, "bad");
                assert_eq!(state.len(), 2);
            }
            other => panic!("expected NonFiniteFunctional, got {other:?}"),
        }
    }

    #[test]
    fn seed_replay_reproduces_trace() {
        let cov = Arc::new(CovarianceModel::dense(DMatrix::identity(3, 3)).unwrap());
        let kernel = ReprojectedPcn::new(cov.clone(), 0.5, |x: &SphereVector| {
            x.coords()[0].powi(2)
        })
        .unwrap();
        let x0 = acg_sample(&cov, &mut ChaCha12Rng::seed_from_u64(9));
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            run_chain(
                &kernel,
                &x0,
                500,
                100,
                &[Functional::coordinate(0)],
                Some(10),
                &mut rng,
            )
            .unwrap()
        };
        let a = run(33);
        let b = run(33);
        assert_eq!(a.functional_series, b.functional_series);
        assert_eq!(a.accepted_count, b.accepted_count);
        assert_eq!(a.jump_distances, b.jump_distances);
        assert_eq!(
            a.states.as_ref().unwrap().len(),
            b.states.as_ref().unwrap().len()
        );
    }

    #[test]
    fn projected_functionals_track_the_ambient_chain() {
        // the projected (non-Markov) trace of an ambient chain: recorded as
        // sphere functionals composed with the radial projection
        use crate::kernels::EssKernel;
        let cov = Arc::new(CovarianceModel::dense(DMatrix::identity(3, 3)).unwrap());
        let kernel = EssKernel::new(cov.clone(), |v: &DVector<f64>| 0.1 * v.norm_squared());
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let x0 = cov.sample(&mut rng);
        let mut trace = run_ambient_chain(
            &kernel,
            &x0,
            400,
            100,
            &[
                AmbientFunctional::projected(Functional::coordinate(0)),
                AmbientFunctional::new("norm", |v: &DVector<f64>| v.norm()),
            ],
            &mut rng,
        )
        .unwrap();
        trace.kernel_id = KernelId::ProjectedWrapper;
        let projected = &trace.functional_series["x0"];
        assert!(projected.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let norms = &trace.functional_series["norm"];
        assert!(norms.iter().any(|v| *v > 1.0));
        assert_eq!(trace.kernel_id, KernelId::ProjectedWrapper);
    }

    #[test]
    fn stored_states_respect_thinning() {
        let x0 = SphereVector::anchor(2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let trace = run_chain(
            &IdentitySphereKernel,
            &x0,
            250,
            50,
            &[],
            Some(25),
            &mut rng,
        )
        .unwrap();
        assert_eq!(trace.states.unwrap().len(), 8); // kept steps 0,25,...,175
    }
}
