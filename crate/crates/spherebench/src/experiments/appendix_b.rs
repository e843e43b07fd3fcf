//! Monte Carlo check that the radially-projected trace of an ambient Markov
//! chain is not itself Markov: two conditional sign probabilities that would
//! be equal under the Markov property, for a Gaussian random walk and for
//! the stationary pCN chain. The projection enters through the fixed anchor
//! `e_d`, which reduces the event to signs of the last coordinate.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixBReport {
    pub n_samples: usize,
    /// P(two-step sign persistence | one positive) and the same conditioned
    /// additionally on the start, for the random walk with s = 1
    pub random_walk: [ProbabilityEstimate; 2],
    /// the pCN analogue with s = 0.5
    pub pcn: [ProbabilityEstimate; 2],
}

fn ratio(numerator: u64, denominator: u64) -> ProbabilityEstimate {
    let p = numerator as f64 / denominator as f64;
    ProbabilityEstimate {
        value: p,
        standard_error: (p * (1.0 - p) / denominator as f64).sqrt(),
    }
}

/// Estimates the four conditional probabilities from `n_samples` i.i.d.
/// triples (W0, W1, W2).
pub fn run_appendix_b(n_samples: usize, seed: u64) -> Result<AppendixBReport> {
    if n_samples < 1_000_000 {
        return Err(HarnessError::Runtime(format!(
            "appendix-b needs at least 1e6 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let s = 0.5f64;
    let c = (1.0 - s * s).sqrt();
    let mut rw = [0u64; 4]; // [num1, den1, num2, den2]
    let mut pcn = [0u64; 4];
    for _ in 0..n_samples {
        let w0: f64 = StandardNormal.sample(&mut rng);
        let w1: f64 = StandardNormal.sample(&mut rng);
        let w2: f64 = StandardNormal.sample(&mut rng);

        // random walk, s = 1: states w0, w0 + w1, w0 + w1 + w2
        let x1 = w0 + w1;
        let x2 = x1 + w2;
        if x1 > 0.0 {
            rw[1] += 1;
            if x2 > 0.0 {
                rw[0] += 1;
            }
            if w0 > 0.0 {
                rw[3] += 1;
                if x2 > 0.0 {
                    rw[2] += 1;
                }
            }
        }

        // stationary pCN chain, s = 0.5
        let y1 = c * w0 + s * w1;
        let y2 = c * y1 + s * w2;
        if y1 > 0.0 {
            pcn[1] += 1;
            if y2 > 0.0 {
                pcn[0] += 1;
            }
            if w0 > 0.0 {
                pcn[3] += 1;
                if y2 > 0.0 {
                    pcn[2] += 1;
                }
            }
        }
    }
    Ok(AppendixBReport {
        n_samples,
        random_walk: [ratio(rw[0], rw[1]), ratio(rw[2], rw[3])],
        pcn: [ratio(pcn[0], pcn[1]), ratio(pcn[2], pcn[3])],
    })
}
