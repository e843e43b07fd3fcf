//! Estimators over chain traces: integrated autocorrelation time (Geyer
//! initial-positive-sequence truncation), root mean squared jump distance,
//! confidence intervals from asymptotic variance, kernel density estimates,
//! binned total-variation distance, and Kolmogorov-Smirnov statistics.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelId;
use crate::sphere::{geodesic_distance, SphereVector};

/// z_{0.975}
const Z_975: f64 = 1.959964;

/// Recorded output of one chain run (post burn-in).
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub kernel_id: KernelId,
    pub dimension: usize,
    pub seed: Option<u64>,
    pub tuning: Option<f64>,
    pub functional_series: BTreeMap<String, Vec<f64>>,
    /// thinned raw states, when requested
    pub states: Option<Vec<DVector<f64>>>,
    pub accepted_count: usize,
    pub step_count: usize,
    pub shrink_tries_total: u64,
    pub shrink_steps: usize,
    pub jump_distances: Vec<f64>,
}

impl ChainTrace {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted_count as f64 / self.step_count as f64
    }

    pub fn mean_shrink_tries(&self) -> Option<f64> {
        (self.shrink_steps > 0)
            .then(|| self.shrink_tries_total as f64 / self.shrink_steps as f64)
    }

    pub fn rmsjd(&self) -> f64 {
        rmsjd_from_jumps(&self.jump_distances)
    }
}

/// Summary statistics for one functional of one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub iact: BTreeMap<String, f64>,
    pub rmsjd: f64,
    pub acceptance_rate: f64,
    pub mean_estimate: BTreeMap<String, f64>,
    pub half_ci: BTreeMap<String, f64>,
    pub mean_shrink_tries: Option<f64>,
}

impl DiagnosticsReport {
    pub fn from_trace(trace: &ChainTrace) -> Result<Self> {
        let mut iact_map = BTreeMap::new();
        let mut mean_map = BTreeMap::new();
        let mut ci_map = BTreeMap::new();
        for (name, series) in &trace.functional_series {
            iact_map.insert(name.clone(), iact(series)?);
            let (mean, half) = mean_with_ci(series, 0.95)?;
            mean_map.insert(name.clone(), mean);
            ci_map.insert(name.clone(), half);
        }
        Ok(Self {
            iact: iact_map,
            rmsjd: trace.rmsjd(),
            acceptance_rate: trace.acceptance_rate(),
            mean_estimate: mean_map,
            half_ci: ci_map,
            mean_shrink_tries: trace.mean_shrink_tries(),
        })
    }
}

/// Integrated autocorrelation time `1 + 2 sum_k rho(k)`, truncated by
/// Geyer's initial positive sequence rule on the pair sums
/// `rho(2k) + rho(2k+1)`; clipped below at 1. A zero-variance series has
/// IACT 1 by convention.
pub fn iact(series: &[f64]) -> Result<f64> {
    if series.len() < 100 {
        return Err(Error::InvalidParameter {
            name: "series",
            reason: format!("need at least 100 points, got {}", series.len()),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "series",
            reason: "series contains non-finite values".into(),
        });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let scale = series.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if var <= (1e-14 * scale).powi(2) {
        // constant up to rounding of the mean subtraction
        return Ok(1.0);
    }
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let mut sum_rho = 0.0;
    let mut lag = 1usize;
    while lag + 1 < n / 2 {
        let pair = (autocov(lag) + autocov(lag + 1)) / var;
        if pair <= 0.0 {
            break;
        }
        sum_rho += pair;
        lag += 2;
    }
    Ok((1.0 + 2.0 * sum_rho).max(1.0))
}

/// Root mean squared geodesic jump distance of a sphere state series.
pub fn rmsjd(states: &[SphereVector]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "states",
            reason: "need at least two states".into(),
        });
    }
    let mut total = 0.0;
    for pair in states.windows(2) {
        total += geodesic_distance(&pair[0], &pair[1])?.powi(2);
    }
    Ok((total / (states.len() - 1) as f64).sqrt())
}

/// RMSJD from per-step jump distances already recorded by a chain driver.
pub fn rmsjd_from_jumps(jumps: &[f64]) -> f64 {
    if jumps.is_empty() {
        return 0.0;
    }
    (jumps.iter().map(|j| j * j).sum::<f64>() / jumps.len() as f64).sqrt()
}

/// Sample mean with the half-width of the asymptotic confidence interval
/// `z * sqrt(iact * var / n)`. Only the 95% level is supported.
pub fn mean_with_ci(series: &[f64], confidence: f64) -> Result<(f64, f64)> {
    if (confidence - 0.95).abs() > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "confidence",
            reason: "only the 0.95 level is supported".into(),
        });
    }
    let tau = iact(series)?;
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, Z_975 * (tau * var / n).sqrt()))
}

/// Gaussian-kernel density estimate with Silverman bandwidth, evaluated on
/// the given grid.
pub fn kde_marginal(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 1000 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("need at least 1000 samples, got {}", samples.len()),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| sorted[((p * n) as usize).min(sorted.len() - 1)];
    let iqr = quantile(0.75) - quantile(0.25);
    let spread = if iqr > 0.0 {
        sd.min(iqr / 1.34)
    } else {
        sd
    };
    if spread == 0.0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "degenerate (zero-spread) sample".into(),
        });
    }
    let h = 0.9 * spread * n.powf(-0.2);
    let norm = 1.0 / (n * h * (std::f64::consts::TAU).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            samples
                .iter()
                .map(|&x| (-0.5 * ((g - x) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect())
}

/// Binned total-variation distance between two sample sets. Bins are equal
/// width over the combined sample range.
pub fn binned_tv(samples_a: &[f64], samples_b: &[f64], bins: usize) -> f64 {
    assert!(bins > 0 && !samples_a.is_empty() && !samples_b.is_empty());
    let lo = samples_a
        .iter()
        .chain(samples_b)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = samples_a
        .iter()
        .chain(samples_b)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return 0.0;
    }
    let width = (hi - lo) / bins as f64;
    let index = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut pa = vec![0.0; bins];
    let mut pb = vec![0.0; bins];
    for &x in samples_a {
        pa[index(x)] += 1.0 / samples_a.len() as f64;
    }
    for &x in samples_b {
        pb[index(x)] += 1.0 / samples_b.len() as f64;
    }
    0.5 * pa
        .iter()
        .zip(&pb)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(samples_a: &[f64], samples_b: &[f64]) -> f64 {
    let mut a: Vec<f64> = samples_a.to_vec();
    let mut b: Vec<f64> = samples_b.to_vec();
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

/// Asymptotic two-sample KS rejection threshold at significance `alpha`.
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One-sample KS statistic against a reference CDF.
pub fn ks_statistic_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d
            .max((f - i as f64 / n).abs())
            .max((f - (i + 1) as f64 / n).abs());
    }
    d
}
