use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use capcover::bounds::{
    efr_reference, euler_report, ldiv_upper_constant, theorem_bounds, upper_limit_large_n, TheoremInputs,
};
use capcover::cap::{cap_mass_from_radius, eta_bound, gaussian_halfspace_offset, radius_from_mass};
use capcover::coverage::{expected_random_coverage, mean_coverage_over_configs};
use capcover::optimizer::{compare_to_bounds, local_search, OptimizationTrace, OptimizerConfig};
use capcover::sampling::{mix, RngSpec, DEFAULT_CHUNK_SIZE};
use capcover::verify::{run_suite, Suite};
use capcover::{Cap, Dim, VerificationReport};

use crate::config::{pick, pick_list, ExperimentConfig};
use crate::output::{num, sink, write_csv, write_json, Format, RunRecord};
use crate::{Grid, Output};

const SELF_CHECK_Z: f64 = 6.0;

fn dim(d: usize) -> Result<Dim> {
    Ok(Dim::new(d)?)
}

fn single<T: Copy>(what: &str, v: &[T]) -> Result<T> {
    match v {
        [x] => Ok(*x),
        _ => bail!("expected exactly one {what}, got {}", v.len()),
    }
}

fn resolve_output(out: Output, allowed: &[Format], default: Format) -> Result<(Format, Option<PathBuf>)> {
    let format = out.format.unwrap_or(default);
    if !allowed.contains(&format) {
        bail!("--format {format:?} is not available for this command");
    }
    Ok((format, out.out))
}

#[derive(Args)]
pub struct CapsArgs {
    /// Ambient dimension d.
    #[arg(short = 'd', long = "dim")]
    dim: Option<usize>,
    /// Normalized cap mass in [0, 1].
    #[arg(long, conflicts_with = "radius")]
    mass: Option<f64>,
    /// Geodesic radius in [0, pi].
    #[arg(long)]
    radius: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CapsRow {
    d: usize,
    mass: f64,
    geodesic_radius: f64,
    cos_threshold: f64,
    gaussian_offset: Option<f64>,
    eta_bound: Option<f64>,
    /// Relative change of the given quantity after converting there and back.
    roundtrip_rel_error: f64,
}

pub fn caps(a: CapsArgs, file: ExperimentConfig, timing: bool) -> Result<u8> {
    let start = Instant::now();
    let from_file = file.dims.as_deref().map(|l| single("dimension", l)).transpose()?;
    let d = dim(pick("dims", a.dim, from_file).unwrap_or(3))?;
    let mass = pick("mass", a.mass, file.mass);
    let radius = pick("radius", a.radius, file.radius);
    let (m, roundtrip) = match (mass, radius) {
        (Some(m), None) => {
            let back = cap_mass_from_radius(d, radius_from_mass(d, m)?)?;
            (m, rel(back, m))
        }
        (None, Some(t)) => {
            let m = cap_mass_from_radius(d, t)?;
            (m, rel(radius_from_mass(d, m)?, t))
        }
        _ => bail!("give exactly one of --mass and --radius"),
    };
    let mut center = vec![0.0; d.get()];
    center[0] = 1.0;
    let cap = match radius {
        Some(t) => Cap::from_radius(center, t)?,
        None => Cap::new(center, m)?,
    };
    let (h, eta) = if m > 0.0 && m < 0.5 {
        (Some(gaussian_halfspace_offset(m)?), Some(eta_bound(m)?))
    } else if m == 0.5 {
        (Some(0.0), None)
    } else {
        (None, None)
    };
    let row = CapsRow {
        d: d.get(),
        mass: cap.mass(),
        geodesic_radius: cap.geodesic_radius(),
        cos_threshold: cap.cos_threshold(),
        gaussian_offset: h,
        eta_bound: eta,
        roundtrip_rel_error: roundtrip,
    };
    let params = ExperimentConfig {
        dims: Some(vec![d.get()]),
        mass,
        radius,
        ..Default::default()
    };
    let (format, out) = resolve_output(a.output, &[Format::Table, Format::Csv, Format::Json], Format::Table)?;
    let record = RunRecord::new("caps", params, None, timing.then(|| start.elapsed()), row);
    match format {
        Format::Json => write_json(out.as_deref(), &[record])?,
        Format::Csv => write_csv(out.as_deref(), &[record])?,
        Format::Table => {
            let r = &record.result;
            let mut w = sink(out.as_deref())?;
            writeln!(w, "d                 {}", r.d)?;
            writeln!(w, "mass              {}", r.mass)?;
            writeln!(w, "geodesic radius   {}", r.geodesic_radius)?;
            writeln!(w, "cos threshold     {}", r.cos_threshold)?;
            writeln!(w, "gaussian offset h {}", num(r.gaussian_offset, 12))?;
            writeln!(w, "eta bound         {}", num(r.eta_bound, 12))?;
            writeln!(w, "roundtrip error   {:.1e}", r.roundtrip_rel_error)?;
            w.flush()?;
        }
    }
    Ok(0)
}

fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    grid: Grid,
    /// Random configurations per grid point.
    #[arg(long)]
    configs: Option<usize>,
    /// Monte Carlo points per configuration.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Points per independently seeded chunk.
    #[arg(long)]
    chunk_size: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulateRow {
    d: usize,
    n: usize,
    alpha: f64,
    configs: usize,
    samples: usize,
    chunk_size: usize,
    mean: f64,
    std_error: f64,
    expected: f64,
    z: f64,
}

/// Seed for one grid point, so that a single-point rerun reproduces it.
fn point_seed(seed: u64, d: usize, n: usize, alpha: f64) -> u64 {
    mix(mix(mix(seed, d as u64), n as u64), alpha.to_bits())
}

pub fn simulate(a: SimulateArgs, file: ExperimentConfig, timing: bool) -> Result<u8> {
    let dims = pick_list("dims", a.grid.dims, file.dims).unwrap_or(vec![10]);
    let ncaps = pick_list("ncaps", a.grid.ncaps, file.ncaps).unwrap_or(vec![1000]);
    let alphas = pick_list("alphas", a.grid.alphas, file.alphas).unwrap_or(vec![1.0]);
    let configs = pick("configs", a.configs, file.configs).unwrap_or(20);
    let samples = pick("samples", a.samples, file.samples).unwrap_or(20_000);
    let seed = pick("seed", a.seed, file.seed).unwrap_or(0);
    let chunk = pick("chunkSize", a.chunk_size, file.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE);
    let (format, out) = resolve_output(a.output, &[Format::Csv, Format::Json], Format::Csv)?;

    for &d in &dims {
        dim(d)?;
    }
    for &n in &ncaps {
        if n == 0 {
            bail!("N must be positive");
        }
    }
    for &alpha in &alphas {
        if !(alpha > 0.0 && alpha <= 1.0) {
            bail!("alpha must lie in (0, 1], got {alpha}");
        }
    }
    let base = RngSpec::new(seed).with_chunk_size(chunk)?;

    let mut records = Vec::new();
    let mut strays = Vec::new();
    for &d in &dims {
        for &n in &ncaps {
            for &alpha in &alphas {
                let start = Instant::now();
                let rng = RngSpec {
                    master_seed: point_seed(seed, d, n, alpha),
                    ..base
                };
                let est = mean_coverage_over_configs(dim(d)?, n, alpha, rng, configs, samples)?;
                let expected = expected_random_coverage(n, alpha)?;
                let z = est.z_score(expected);
                if z.is_nan() || z.abs() > SELF_CHECK_Z {
                    strays.push(format!("d={d} N={n} alpha={alpha}: z = {z:.2}"));
                }
                let params = ExperimentConfig {
                    dims: Some(vec![d]),
                    ncaps: Some(vec![n]),
                    alphas: Some(vec![alpha]),
                    seed: Some(seed),
                    configs: Some(configs),
                    samples: Some(samples),
                    chunk_size: Some(chunk),
                    ..Default::default()
                };
                let row = SimulateRow {
                    d,
                    n,
                    alpha,
                    configs,
                    samples,
                    chunk_size: chunk,
                    mean: est.mean,
                    std_error: est.std_error,
                    expected,
                    z,
                };
                records.push(RunRecord::new("simulate", params, Some(seed), timing.then(|| start.elapsed()), row));
            }
        }
    }
    match format {
        Format::Json => write_json(out.as_deref(), &records)?,
        _ => write_csv(out.as_deref(), &records)?,
    }
    if strays.is_empty() {
        Ok(0)
    } else {
        for s in strays {
            eprintln!("self-check failed: {s}");
        }
        Ok(3)
    }
}

#[derive(Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
struct BoundsRow {
    d: usize,
    n: usize,
    alpha: f64,
    precondition_met: bool,
    note: String,
    lower: Option<f64>,
    base: Option<f64>,
    beta_n: Option<f64>,
    alpha_n: Option<f64>,
    cone_term: Option<f64>,
    zone_term: Option<f64>,
    threshold_n: Option<f64>,
    upper: Option<f64>,
    /// Upper bound in the limit `N → ∞` at this `d` and `alpha`.
    upper_large_n: Option<f64>,
    efr_reference: f64,
    euler_coverage_lower: Option<f64>,
    euler_coverage_upper: Option<f64>,
    euler_e_lower: Option<f64>,
    euler_e_upper: Option<f64>,
    ldiv_upper: f64,
}

pub fn bounds(a: BoundsArgs, file: ExperimentConfig, timing: bool) -> Result<u8> {
    let dims = pick_list("dims", a.grid.dims, file.dims).unwrap_or(vec![5, 10, 20, 50, 100]);
    let ncaps = pick_list("ncaps", a.grid.ncaps, file.ncaps).unwrap_or(vec![1000, 1_000_000, 1_000_000_000]);
    let alphas = pick_list("alphas", a.grid.alphas, file.alphas).unwrap_or(vec![1.0]);
    let (format, out) = resolve_output(a.output, &[Format::Table, Format::Csv, Format::Json], Format::Table)?;
    let ldiv = ldiv_upper_constant()?;

    let mut records = Vec::new();
    for &d in &dims {
        let dd = dim(d)?;
        for &n in &ncaps {
            for &alpha in &alphas {
                let start = Instant::now();
                let mut row = BoundsRow {
                    d,
                    n,
                    alpha,
                    efr_reference: efr_reference(),
                    ldiv_upper: ldiv,
                    ..Default::default()
                };
                if d < 5 {
                    row.note = "precondition unmet: d < 5".into();
                } else {
                    match TheoremInputs::new(dd, n, alpha).and_then(theorem_bounds) {
                        Ok(r) => {
                            row.precondition_met = r.precondition_met;
                            if !r.precondition_met {
                                row.note = format!("precondition unmet: N < {}", num(Some(r.threshold_n), 6));
                            }
                            row.lower = Some(r.lower);
                            row.base = Some(r.base);
                            row.beta_n = Some(r.beta_n);
                            row.alpha_n = Some(r.alpha_n);
                            row.cone_term = Some(r.cone_term);
                            row.zone_term = Some(r.zone_term);
                            row.threshold_n = Some(r.threshold_n);
                            row.upper = Some(r.upper);
                        }
                        Err(e) => row.note = format!("not evaluated: {e}"),
                    }
                    if alpha > 0.0 && alpha <= 1.0 {
                        row.upper_large_n = Some(upper_limit_large_n(dd, alpha)?);
                    }
                    if alpha == 1.0 {
                        let e = euler_report(&[dd])?[0];
                        row.euler_coverage_lower = Some(e.coverage_lower);
                        row.euler_coverage_upper = Some(e.coverage_upper);
                        row.euler_e_lower = Some(e.e_lower);
                        row.euler_e_upper = Some(e.e_upper);
                    }
                }
                let params = ExperimentConfig {
                    dims: Some(vec![d]),
                    ncaps: Some(vec![n]),
                    alphas: Some(vec![alpha]),
                    ..Default::default()
                };
                records.push(RunRecord::new("bounds", params, None, timing.then(|| start.elapsed()), row));
            }
        }
    }
    match format {
        Format::Json => write_json(out.as_deref(), &records)?,
        Format::Csv => write_csv(out.as_deref(), &records)?,
        Format::Table => {
            let mut w = sink(out.as_deref())?;
            writeln!(
                w,
                "{:>7} {:>12} {:>6} {:>10} {:>10} {:>10} {:>12} {:>25}  note",
                "d", "N", "alpha", "lower", "base", "upper", "upper(N=inf)", "e bracket"
            )?;
            for r in records.iter().map(|r| &r.result) {
                let bracket = match (r.euler_e_lower, r.euler_e_upper) {
                    (Some(lo), Some(hi)) => format!("[{}, {}]", num(Some(lo), 8), num(Some(hi), 8)),
                    _ => "-".into(),
                };
                writeln!(
                    w,
                    "{:>7} {:>12} {:>6} {:>10} {:>10} {:>10} {:>12} {:>25}  {}",
                    r.d,
                    r.n,
                    r.alpha,
                    num(r.lower, 6),
                    num(r.base, 6),
                    num(r.upper, 6),
                    num(r.upper_large_n, 6),
                    bracket,
                    r.note
                )?;
            }
            writeln!(w)?;
            writeln!(w, "random-polytope reference: {}", efr_reference())?;
            writeln!(w, "ldiv upper constant: {ldiv:.12}")?;
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Args)]
pub struct VerifyArgs {
    /// all, zone, cone, sidak, scalar or conemass.
    #[arg(long)]
    suite: Option<String>,
    /// Seed for the Monte Carlo suites.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

pub fn verify(a: VerifyArgs, file: ExperimentConfig, timing: bool) -> Result<u8> {
    let suite_name = pick("suite", a.suite, file.suite).unwrap_or_else(|| "all".into());
    let suite: Suite = suite_name.parse()?;
    let seed = pick("seed", a.seed, file.seed).unwrap_or(0);
    let (format, out) = resolve_output(a.output, &[Format::Table, Format::Json], Format::Table)?;
    let start = Instant::now();
    let reports = run_suite(suite, RngSpec::new(seed))?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    let params = ExperimentConfig {
        suite: Some(suite_name),
        seed: Some(seed),
        ..Default::default()
    };
    let record = RunRecord::new("verify", params, Some(seed), timing.then(|| start.elapsed()), reports);
    match format {
        Format::Json => write_json(out.as_deref(), &[&record])?,
        _ => {
            let mut w = sink(out.as_deref())?;
            for r in &record.result {
                writeln!(
                    w,
                    "{} {:<48} lhs {:>13} rhs {:>13} tol {:>9}  {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    num(Some(r.lhs), 7),
                    num(Some(r.rhs), 7),
                    num(Some(r.tolerance), 2),
                    r.detail
                )?;
            }
            writeln!(w, "{} of {} checks pass", record.result.len() - failed, record.result.len())?;
            w.flush()?;
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    grid: Grid,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Initial perturbation angle in radians.
    #[arg(long)]
    step_angle: Option<f64>,
    /// Factor applied to the step angle after a run of rejected moves.
    #[arg(long)]
    decay: Option<f64>,
    /// Size of the fixed point set the objective is evaluated on.
    #[arg(long)]
    crn_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Move caps in rigid antipodal pairs.
    #[arg(long)]
    antipodal: bool,
    /// Trace file.
    #[arg(long, default_value = "trace.json")]
    out: PathBuf,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OptimizeResult {
    trace: OptimizationTrace,
    checks: Vec<VerificationReport>,
}

pub fn optimize(a: OptimizeArgs, file: ExperimentConfig, timing: bool) -> Result<u8> {
    let d = single("dimension", &pick_list("dims", a.grid.dims, file.dims).unwrap_or(vec![3]))?;
    let n = single("cap count", &pick_list("ncaps", a.grid.ncaps, file.ncaps).unwrap_or(vec![16]))?;
    let alpha = single("alpha", &pick_list("alphas", a.grid.alphas, file.alphas).unwrap_or(vec![1.0]))?;
    let defaults = OptimizerConfig::default();
    let seed = pick("seed", a.seed, file.seed).unwrap_or(0);
    let cfg = OptimizerConfig {
        steps: pick("steps", a.steps, file.steps).unwrap_or(defaults.steps),
        restarts: pick("restarts", a.restarts, file.restarts).unwrap_or(defaults.restarts),
        initial_step_angle: pick("stepAngle", a.step_angle, file.step_angle).unwrap_or(defaults.initial_step_angle),
        decay: pick("decay", a.decay, file.decay).unwrap_or(defaults.decay),
        crn_samples: pick("crnSamples", a.crn_samples, file.crn_samples).unwrap_or(defaults.crn_samples),
        rng: RngSpec::new(seed),
        antipodal: pick("antipodal", a.antipodal.then_some(true), file.antipodal).unwrap_or(false),
    };
    let start = Instant::now();
    let trace = local_search(dim(d)?, n, alpha, &cfg)?;
    let checks = match TheoremInputs::new(dim(d)?, n, alpha) {
        Ok(inputs) => compare_to_bounds(&trace, inputs)?,
        Err(_) => Vec::new(),
    };
    let elapsed = start.elapsed();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let upper = match trace.theorem_upper {
        None => "not applicable".to_string(),
        Some(u) if u >= 1.0 => format!("vacuous ({u:.4})"),
        Some(u) => format!("{u:.6}"),
    };
    let best = &trace.best_coverage;
    let summary = format!(
        "best {:.6} ({}) | random baseline {:.6} | theorem upper {} | accepted moves {}",
        best.mean,
        if trace.exact { "exact".to_string() } else { format!("+/- {:.6}", best.std_error) },
        trace.random_baseline,
        upper,
        trace.accepted_moves
    );
    let params = ExperimentConfig {
        dims: Some(vec![d]),
        ncaps: Some(vec![n]),
        alphas: Some(vec![alpha]),
        seed: Some(seed),
        steps: Some(cfg.steps),
        restarts: Some(cfg.restarts),
        step_angle: Some(cfg.initial_step_angle),
        decay: Some(cfg.decay),
        crn_samples: Some(cfg.crn_samples),
        antipodal: Some(cfg.antipodal),
        ..Default::default()
    };
    let record = RunRecord::new("optimize", params, Some(seed), timing.then_some(elapsed), OptimizeResult { trace, checks });
    write_json(Some(&a.out), &record)?;
    println!("{summary}");
    for c in record.result.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}: {} vs {} ({})", c.name, c.lhs, c.rhs, c.detail);
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
