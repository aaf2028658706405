//! Hill climbing over cap centers to probe the best covering at small `d`.
//!
//! Each restart fixes one set of evaluation points (common random numbers)
//! and only accepts moves that strictly increase the number of covered
//! points. The winning configuration is then measured again on fresh points,
//! or exactly when an exact formula exists.

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bounds::{theorem_bounds, TheoremInputs};
use crate::cap::{dot, mass_upper_limit, Dim};
use crate::coverage::{exact_coverage_circle, expected_random_coverage, mc_coverage, CoverageEstimate};
use crate::error::{domain, Result};
use crate::sampling::{
    antipodal_configuration, fill_gaussian, random_configuration, sample_uniform_sphere, Configuration, RngSpec,
    SpherePoints,
};
use crate::verify::VerificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizerConfig {
    pub steps: usize,
    pub restarts: usize,
    pub initial_step_angle: f64,
    pub decay: f64,
    pub crn_samples: usize,
    pub rng: RngSpec,
    pub antipodal: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            steps: 4000,
            restarts: 4,
            initial_step_angle: 0.5,
            decay: 0.7,
            crn_samples: 20_000,
            rng: RngSpec::default(),
            antipodal: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.restarts == 0 {
            return Err(domain("OptimizerConfig", "steps and restarts must be positive"));
        }
        if !(self.initial_step_angle > 0.0 && self.initial_step_angle < std::f64::consts::PI) {
            return Err(domain("OptimizerConfig", "initial step angle must lie in (0, pi)"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(domain("OptimizerConfig", "decay must lie in (0, 1)"));
        }
        if self.crn_samples < 10_000 {
            return Err(domain("OptimizerConfig", "need at least 1e4 CRN samples"));
        }
        Ok(())
    }

    /// Number of consecutive rejected steps after which the step angle decays.
    pub fn decay_window(&self) -> usize {
        (self.steps / 10).max(1)
    }
}

const HISTORY_LIMIT: usize = 1000;

fn downsample<S: Serializer>(h: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    if h.len() <= HISTORY_LIMIT {
        return h.serialize(s);
    }
    let last = h.len() - 1;
    let picked: Vec<f64> = (0..HISTORY_LIMIT)
        .map(|i| h[i * last / (HISTORY_LIMIT - 1)])
        .collect();
    picked.serialize(s)
}

fn not_applicable<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("not applicable"),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizationTrace {
    pub d: Dim,
    pub n: usize,
    pub alpha: f64,
    /// Re-measurement of the final configuration, independent of the CRN set.
    pub best_coverage: CoverageEstimate,
    /// Whether `best_coverage` is exact rather than Monte Carlo.
    pub exact: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// CRN objective after every step of the winning restart.
    #[serde(serialize_with = "downsample")]
    pub objective_history: Vec<f64>,
    pub accepted_moves: usize,
    pub restart_objectives: Vec<f64>,
    pub final_config: Configuration,
    /// `1 - (1 - α/N)^N`
    pub random_baseline: f64,
    #[serde(serialize_with = "not_applicable")]
    pub theorem_upper: Option<f64>,
    pub settings: OptimizerConfig,
}

/// Covered fraction of a fixed point set.
pub fn crn_objective(config: &Configuration, crn_points: &SpherePoints) -> f64 {
    let packed = config.packed();
    let hits = crn_points.iter().filter(|p| packed.covers(p)).count();
    hits as f64 / crn_points.len() as f64
}

struct Climb {
    objective_history: Vec<f64>,
    initial: f64,
    accepted: usize,
    config: Configuration,
    hits: usize,
}

/// Point membership of one cap on the CRN set.
fn members(center: &[f64], threshold: f64, full: bool, pts: &SpherePoints) -> Vec<bool> {
    pts.iter().map(|p| full || dot(center, p) >= threshold).collect()
}

fn tangent_step<R: Rng>(rng: &mut R, center: &[f64], angle: f64) -> Vec<f64> {
    let d = center.len();
    let mut v = vec![0.0; d];
    loop {
        fill_gaussian(rng, &mut v);
        let along = dot(&v, center);
        v.iter_mut().zip(center).for_each(|(x, c)| *x -= along * c);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            break;
        }
    }
    let (s, c) = angle.sin_cos();
    let mut out: Vec<f64> = center.iter().zip(&v).map(|(x, t)| c * x + s * t).collect();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.iter_mut().for_each(|x| *x /= norm);
    out
}

fn climb(mut config: Configuration, pts: &SpherePoints, cfg: &OptimizerConfig, rng: RngSpec) -> Climb {
    let caps = config.caps();
    let mut member: Vec<Vec<bool>> = caps
        .iter()
        .map(|c| members(c.center(), c.cos_threshold(), c.is_full(), pts))
        .collect();
    let mut count = vec![0u32; pts.len()];
    for m in &member {
        for (c, &b) in count.iter_mut().zip(m) {
            *c += b as u32;
        }
    }
    let mut hits = count.iter().filter(|&&c| c > 0).count();
    let n_pts = pts.len() as f64;
    let initial = hits as f64 / n_pts;
    let mut history = Vec::with_capacity(cfg.steps);
    let mut accepted = 0;
    let mut angle = cfg.initial_step_angle;
    let mut idle = 0;
    let mut r = rng.chunk_rng(0);
    let stride = if config.is_antipodal() { 2 } else { 1 };
    let units = config.len() / stride;
    for _ in 0..cfg.steps {
        let i = r.random_range(0..units) * stride;
        let cap = &config.caps()[i];
        let proposal = tangent_step(&mut r, cap.center(), angle);
        let mut moved = vec![(i, members(&proposal, cap.cos_threshold(), cap.is_full(), pts))];
        if stride == 2 {
            let mirror: Vec<f64> = proposal.iter().map(|x| -x).collect();
            let partner = &config.caps()[i + 1];
            moved.push((i + 1, members(&mirror, partner.cos_threshold(), partner.is_full(), pts)));
        }
        let mut new_hits = hits;
        for p in 0..pts.len() {
            let mut c = count[p] as i64;
            for (j, m) in &moved {
                c += m[p] as i64 - member[*j][p] as i64;
            }
            new_hits = new_hits + (c > 0) as usize - (count[p] > 0) as usize;
        }
        if new_hits > hits {
            for (j, m) in moved {
                for p in 0..pts.len() {
                    count[p] = (count[p] as i64 + m[p] as i64 - member[j][p] as i64) as u32;
                }
                member[j] = m;
            }
            config.move_cap(i, proposal);
            hits = new_hits;
            accepted += 1;
            idle = 0;
        } else {
            idle += 1;
            if idle >= cfg.decay_window() {
                angle *= cfg.decay;
                idle = 0;
            }
        }
        history.push(hits as f64 / n_pts);
    }
    Climb {
        objective_history: history,
        initial,
        accepted,
        config,
        hits,
    }
}

/// Best covering found by hill climbing from random starts.
///
/// Restart `r` uses `cfg.rng.substream(r)`; its sub-streams 0, 1 and 2 seed the
/// initial centers, the CRN points and the moves. The fresh re-estimate uses
/// `cfg.rng.substream(u64::MAX)`. For `d = 2` and for a single cap (or pair)
/// the covered fraction is computed exactly instead.
pub fn local_search(d: Dim, n: usize, alpha: f64, cfg: &OptimizerConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    if n == 0 || !(alpha > 0.0 && alpha <= 1.0) || alpha / n as f64 > 1.0 {
        return Err(domain("local_search", "need N >= 1, 0 < alpha <= 1 and alpha / N <= 1"));
    }
    let mass = alpha / n as f64;
    if cfg.antipodal {
        if !n.is_multiple_of(2) {
            return Err(domain("local_search", "antipodal search needs an even N"));
        }
        if mass >= mass_upper_limit(d) {
            return Err(domain("local_search", "alpha / N exceeds the antipodal mass limit"));
        }
    }
    let start = |rs: RngSpec| -> Result<Configuration> {
        if cfg.antipodal {
            let centers = sample_uniform_sphere(d, rs, n / 2)?.to_vecs();
            Ok(antipodal_configuration(&centers, &vec![mass; n / 2])?.with_alpha(alpha))
        } else {
            random_configuration(d, n, alpha, rs)
        }
    };
    let single = n == 1 || (cfg.antipodal && n == 2);
    let climbs = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let rs = cfg.rng.substream(r);
            let init = start(rs.substream(0))?;
            let pts = sample_uniform_sphere(d, rs.substream(1), cfg.crn_samples)?;
            if single {
                // The covered measure does not depend on the centers.
                let hits = (crn_objective(&init, &pts) * pts.len() as f64).round() as usize;
                let v = hits as f64 / pts.len() as f64;
                return Ok(Climb {
                    objective_history: vec![v; cfg.steps],
                    initial: v,
                    accepted: 0,
                    config: init,
                    hits,
                });
            }
            Ok(climb(init, &pts, cfg, rs.substream(2)))
        })
        .collect::<Result<Vec<_>>>()?;
    let restart_objectives: Vec<f64> = climbs.iter().map(|c| c.hits as f64 / cfg.crn_samples as f64).collect();
    let best = climbs
        .into_iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.hits.cmp(&b.hits).then(ib.cmp(ia)))
        .map(|(_, c)| c)
        .expect("restarts >= 1");
    let fresh = cfg.rng.substream(u64::MAX);
    let (best_coverage, exact) = if single || d.get() == 2 {
        let v = if single { alpha } else { exact_coverage_circle(&best.config)? };
        (
            CoverageEstimate {
                mean: v,
                std_error: 0.0,
                n_samples: 0,
                rng: fresh,
                n_configs: 1,
            },
            true,
        )
    } else {
        (mc_coverage(&best.config, fresh, cfg.crn_samples)?, false)
    };
    let theorem_upper = TheoremInputs::new(d, n, alpha)
        .ok()
        .filter(|_| d.get() >= 5)
        .map(theorem_bounds)
        .transpose()?
        .map(|r| r.upper);
    Ok(OptimizationTrace {
        d,
        n,
        alpha,
        best_coverage,
        exact,
        initial_objective: best.initial,
        final_objective: best.hits as f64 / cfg.crn_samples as f64,
        objective_history: best.objective_history,
        accepted_moves: best.accepted,
        restart_objectives,
        final_config: best.config,
        random_baseline: expected_random_coverage(n, alpha)?,
        theorem_upper,
        settings: *cfg,
    })
}

/// Checks the re-measured best coverage against the random baseline and,
/// where it is informative, against the theorem's upper bound.
pub fn compare_to_bounds(trace: &OptimizationTrace, inputs: TheoremInputs) -> Result<Vec<VerificationReport>> {
    let est = trace.best_coverage;
    let slack = 4.0 * est.std_error;
    let upper = if inputs.d.get() < 5 {
        VerificationReport::inequality(
            "best <= theorem upper",
            est.mean,
            1.0,
            slack,
            format!("not applicable: d = {} < 5", inputs.d),
        )
    } else {
        let r = theorem_bounds(inputs)?;
        if r.upper >= 1.0 {
            VerificationReport::inequality("best <= theorem upper", est.mean, r.upper, slack, "bound vacuous (upper >= 1)")
        } else if !r.precondition_met {
            VerificationReport::inequality(
                "best <= theorem upper",
                est.mean,
                r.upper,
                f64::INFINITY,
                format!("not applicable: N below threshold {:.6e}", r.threshold_n),
            )
        } else {
            VerificationReport::inequality("best <= theorem upper", est.mean, r.upper, slack, "tolerance 4 SE")
        }
    };
    let baseline = expected_random_coverage(inputs.n, inputs.alpha)?;
    let lower = VerificationReport::inequality(
        "random baseline <= best",
        baseline,
        est.mean,
        slack,
        "tolerance 4 SE",
    );
    Ok(vec![upper, lower])
}
