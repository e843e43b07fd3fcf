//! The naive reprojection kernel: apply an ambient kernel directly to the
//! sphere point (no radial lift) and project the result. The missing
//! conditional-radius average breaks target invariance, which is exactly why
//! this exists -- as a negative control for the reprojected kernels.

use rand::RngCore;

use crate::error::Result;
use crate::sphere::{geodesic_distance, project_to_sphere, SphereVector};

use super::{AmbientKernel, KernelId, KernelStep, SphereKernel};

pub struct NaiveReprojection<K> {
    inner: K,
}

impl<K: AmbientKernel> NaiveReprojection<K> {
    pub fn new(inner: K) -> Self {
        Self { inner }
    }
}

impl<K: AmbientKernel> SphereKernel for NaiveReprojection<K> {
    fn step(
        &self,
        state: &SphereVector,
        _state_cache: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep> {
        let inner_step = self.inner.step(state.coords(), None, rng)?;
        let next = project_to_sphere(&inner_step.next)?;
        Ok(KernelStep {
            jump_distance: geodesic_distance(state, &next)?,
            next,
            accepted: inner_step.accepted,
            proposal: None,
            shrink_tries: inner_step.shrink_tries,
            state_cache: None,
        })
    }

    fn id(&self) -> KernelId {
        KernelId::NaiveRepro
    }

    fn is_negative_control(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    use super::*;
    use crate::gaussian::CovarianceModel;
    use crate::kernels::{AmbientKernelStep, PcnKernel, ReprojectedPcn};
    use crate::sphere::acg_sample;

    fn counterexample_cov() -> Arc<CovarianceModel> {
        Arc::new(
            CovarianceModel::dense(DMatrix::from_row_slice(
                3,
                3,
                &[1.25, 0.33, -1.62, 0.33, 0.42, -0.09, -1.62, -0.09, 2.85],
            ))
            .unwrap(),
        )
    }

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

    struct IdentityKernel;

    impl AmbientKernel for IdentityKernel {
        fn step(
            &self,
            state: &DVector<f64>,
            _cache: Option<f64>,
            _rng: &mut dyn RngCore,
        ) -> Result<AmbientKernelStep> {
            Ok(AmbientKernelStep {
                next: state.clone(),
                accepted: true,
                shrink_tries: None,
                state_cache: None,
            })
        }

        fn id(&self) -> KernelId {
            KernelId::PcnAmbient
        }
    }

    #[test]
    fn identity_inner_kernel_is_fixed_point() {
        let kernel = NaiveReprojection::new(IdentityKernel);
        let cov = counterexample_cov();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let x = acg_sample(&cov, &mut rng);
        let step = kernel.step(&x, None, &mut rng).unwrap();
        assert!((step.next.coords() - x.coords()).norm() < 1e-14);
        assert_eq!(step.jump_distance, 0.0);
    }

    #[test]
    fn flagged_as_negative_control() {
        let kernel = NaiveReprojection::new(IdentityKernel);
        assert!(kernel.is_negative_control());
        assert_eq!(kernel.id(), KernelId::NaiveRepro);
    }

    #[test]
    fn one_step_marginals_shift_while_reprojected_do_not() {
        // the counterexample setup: pCN inner kernel, s = 0.7, flat potential.
        // One naive step from ACG(C) visibly leaves ACG(C); one reprojected
        // pCN step does not. KS statistics differ by at least a factor 5.
        let cov = counterexample_cov();
        let s = 0.7;
        let naive = NaiveReprojection::new(
            PcnKernel::new(cov.clone(), s, |_: &DVector<f64>| 0.0).unwrap(),
        );
        let repro = ReprojectedPcn::new(cov.clone(), s, |_: &SphereVector| 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 200_000;
        let mut target: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 3];
        let mut naive_out: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 3];
        let mut repro_out: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 3];
        for _ in 0..n {
            let t = acg_sample(&cov, &mut rng);
            for i in 0..3 {
                target[i].push(t.coords()[i]);
            }
            let start = acg_sample(&cov, &mut rng);
            let a = naive.step(&start, None, &mut rng).unwrap().next;
            let b = repro.step(&start, None, &mut rng).unwrap().next;
            for i in 0..3 {
                naive_out[i].push(a.coords()[i]);
                repro_out[i].push(b.coords()[i]);
            }
        }
        let threshold = 1.628 * (2.0 / n as f64).sqrt();
        let mut max_ratio: f64 = 0.0;
        for i in 0..3 {
            let ks_naive = ks2(&mut naive_out[i], &mut target[i].clone());
            let ks_repro = ks2(&mut repro_out[i], &mut target[i]);
            assert!(
                ks_repro < threshold,
                "reprojected coordinate {i}: KS {ks_repro} >= {threshold}"
            );
            max_ratio = max_ratio.max(ks_naive / ks_repro);
        }
        assert!(
            max_ratio >= 5.0,
            "naive/reprojected KS ratio only {max_ratio}"
        );
    }
}
