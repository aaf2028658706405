//! Covered measure `σ(∪ caps)` of a configuration.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cap::Dim;
use crate::error::{domain, Result};
use crate::sampling::{fill_unit, random_configuration, Configuration, RngSpec};

/// A Monte Carlo estimate of a covered fraction.
///
/// For a single configuration `std_error` is the binomial
/// `√(p̂(1-p̂)/n_samples)`. For an average over `n_configs > 1` random
/// configurations it is the sample standard deviation of the per-configuration
/// estimates divided by `√n_configs`, which accounts for both the randomness of
/// the centers and the sampling noise; `n_samples` is then the number of
/// points per configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub rng: RngSpec,
    pub n_configs: usize,
}

impl CoverageEstimate {
    /// Number of standard errors separating `self.mean` from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY.copysign(self.mean - target)
            }
        } else {
            (self.mean - target) / self.std_error
        }
    }

    pub fn joint_std_error(&self, other: &CoverageEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EstimateRecord {
    mean: f64,
    std_error: f64,
    n_samples: usize,
    seed: u64,
    chunk_size: usize,
    n_configs: usize,
}

impl Serialize for CoverageEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EstimateRecord {
            mean: self.mean,
            std_error: self.std_error,
            n_samples: self.n_samples,
            seed: self.rng.master_seed,
            chunk_size: self.rng.chunk_size,
            n_configs: self.n_configs,
        }
        .serialize(s)
    }
}

pub const MIN_SAMPLES: usize = 100;

/// Fraction of `n_samples` uniform points lying in at least one cap.
pub fn mc_coverage(config: &Configuration, rng: RngSpec, n_samples: usize) -> Result<CoverageEstimate> {
    if config.is_empty() {
        return Err(domain("mc_coverage", "configuration has no caps"));
    }
    if n_samples < MIN_SAMPLES {
        return Err(domain("mc_coverage", format!("need at least {MIN_SAMPLES} samples")));
    }
    let packed = config.packed();
    let d = config.dim().get();
    let hits: u64 = rng
        .map_chunks(n_samples, |r, _, len| {
            let mut p = vec![0.0; d];
            let mut hits = 0u64;
            for _ in 0..len {
                fill_unit(r, &mut p);
                hits += packed.covers(&p) as u64;
            }
            hits
        })
        .into_iter()
        .sum();
    let n = n_samples as f64;
    let mean = hits as f64 / n;
    Ok(CoverageEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / n).sqrt(),
        n_samples,
        rng,
        n_configs: 1,
    })
}

/// Exact covered fraction of the circle, by merging arcs of half-angle `π m`.
pub fn exact_coverage_circle(config: &Configuration) -> Result<f64> {
    if config.dim().get() != 2 {
        return Err(domain(
            "exact_coverage_circle",
            format!("needs d = 2, got d = {}", config.dim()),
        ));
    }
    let two_pi = 2.0 * PI;
    let mut arcs = Vec::with_capacity(2 * config.len());
    for cap in config.caps() {
        if cap.is_full() {
            return Ok(1.0);
        }
        let c = cap.center();
        let half = PI * cap.mass();
        let start = (c[1].atan2(c[0]) - half).rem_euclid(two_pi);
        let end = start + 2.0 * half;
        if end > two_pi {
            arcs.push((start, two_pi));
            arcs.push((0.0, end - two_pi));
        } else {
            arcs.push((start, end));
        }
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (s, e) in arcs {
        current = match current {
            Some((cs, ce)) if s <= ce => Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                covered += ce - cs;
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some((cs, ce)) = current {
        covered += ce - cs;
    }
    Ok((covered / two_pi).clamp(0.0, 1.0))
}

/// `E σ(∪ caps) = 1 - (1 - α/N)^N` for `N` caps of mass `α/N` with i.i.d.
/// uniform centers, in any dimension.
pub fn expected_random_coverage(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || !(alpha > 0.0) || alpha > n as f64 {
        return Err(domain(
            "expected_random_coverage",
            format!("need N >= 1 and 0 < alpha <= N, got N = {n}, alpha = {alpha}"),
        ));
    }
    let nf = n as f64;
    Ok(-f64::exp_m1(nf * f64::ln_1p(-alpha / nf)))
}

fn summarize(values: &[f64], rng: RngSpec, n_samples: usize, single_se: f64) -> CoverageEstimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        single_se
    };
    CoverageEstimate {
        mean,
        std_error,
        n_samples,
        rng,
        n_configs: values.len(),
    }
}

/// Average covered fraction over `n_configs` independent random
/// configurations, each estimated from `n_samples_per_config` points.
///
/// Configuration `i` draws its centers from `rng.substream(2i)` and its
/// evaluation points from `rng.substream(2i + 1)`.
pub fn mean_coverage_over_configs(
    d: Dim,
    n: usize,
    alpha: f64,
    rng: RngSpec,
    n_configs: usize,
    n_samples_per_config: usize,
) -> Result<CoverageEstimate> {
    if n_configs == 0 {
        return Err(domain("mean_coverage_over_configs", "need at least one configuration"));
    }
    let estimates = (0..n_configs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = random_configuration(d, n, alpha, rng.substream(2 * i))?;
            mc_coverage(&cfg, rng.substream(2 * i + 1), n_samples_per_config)
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    Ok(summarize(&means, rng, n_samples_per_config, estimates[0].std_error))
}

/// As [`mean_coverage_over_configs`] on the circle, with each configuration
/// measured exactly. `n_samples` is reported as 0 since no points are drawn.
pub fn mean_exact_coverage_circle(n: usize, alpha: f64, rng: RngSpec, n_configs: usize) -> Result<CoverageEstimate> {
    if n_configs == 0 {
        return Err(domain("mean_exact_coverage_circle", "need at least one configuration"));
    }
    let d = Dim::new(2)?;
    let values = (0..n_configs as u64)
        .into_par_iter()
        .map(|i| exact_coverage_circle(&random_configuration(d, n, alpha, rng.substream(2 * i))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&values, rng, 0, 0.0))
}
