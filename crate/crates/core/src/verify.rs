//! Numerical checks of the Gaussian-geometry estimates and scalar
//! inequalities behind the covering bounds.
//!
//! Every check returns a [`VerificationReport`]. Inequality reports pass when
//! `lhs <= rhs + tolerance`, identity reports when `|lhs - rhs| <= tolerance`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::Serialize;

use crate::bounds::{threshold_n, zone_bound, zone_coefficient};
use crate::cap::{ball_volume_log, cap_mass_from_radius, dot, mass_upper_limit, Cap, ConeGeometry, Dim};
use crate::error::{domain, Result};
use crate::quadrature::{integrate, QuadTolerance};
use crate::sampling::{fill_gaussian, fill_unit, RngSpec};
use crate::special::{
    gauss_tail, gauss_tail_scaled, inv_reg_inc_beta, lambert_w0, ln_lower_inc_gamma, ln_stirling_lower,
    log_gamma, reg_inc_beta, Tolerance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Inequality,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl VerificationReport {
    /// `lhs <= rhs + tolerance`.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            kind: CheckKind::Inequality,
            passed: lhs <= rhs + tolerance,
            lhs,
            rhs,
            tolerance,
            detail: detail.into(),
        }
    }

    /// `|lhs - rhs| <= tolerance`.
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            kind: CheckKind::Identity,
            passed: (lhs - rhs).abs() <= tolerance,
            lhs,
            rhs,
            tolerance,
            detail: detail.into(),
        }
    }
}

/// The symmetric slab `{x : |<x, u>| <= t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Slab {
    normal: Vec<f64>,
    half_width: f64,
}

impl Slab {
    pub fn new(normal: Vec<f64>, half_width: f64) -> Result<Self> {
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(domain("Slab::new", format!("normal must be a unit vector, |u| = {norm}")));
        }
        if !(half_width > 0.0) {
            return Err(domain("Slab::new", "half width must be positive"));
        }
        Ok(Slab { normal, half_width })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `γ_d(slab) = 1 - 2 Q(t)`.
    pub fn gaussian_measure(&self) -> f64 {
        1.0 - 2.0 * gauss_tail(self.half_width)
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.normal, x).abs() <= self.half_width
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Fraction of `n` standard Gaussian vectors in `R^d` satisfying `pred`.
fn gaussian_hit_fraction<P>(d: usize, rng: RngSpec, n: usize, pred: P) -> f64
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let hits: u64 = rng
        .map_chunks(n, |r, _, len| {
            let mut x = vec![0.0; d];
            let mut hits = 0u64;
            for _ in 0..len {
                fill_gaussian(r, &mut x);
                hits += pred(&x) as u64;
            }
            hits
        })
        .into_iter()
        .sum();
    hits as f64 / n as f64
}

/// The spanned cone of a cap has standard Gaussian measure equal to the cap's
/// normalized surface measure. Membership of `x` is tested on `x / |x|`.
pub fn cone_measure_identity_mc(cap: &Cap, rng: RngSpec, n_samples: usize) -> Result<VerificationReport> {
    if n_samples < 10_000 {
        return Err(domain("cone_measure_identity_mc", "need at least 1e4 samples"));
    }
    let d = cap.dim().get();
    let p = gaussian_hit_fraction(d, rng, n_samples, |x| {
        if cap.is_full() {
            return true;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot(cap.center(), x) >= cap.cos_threshold() * norm
    });
    let se = binomial_se(p, n_samples);
    Ok(VerificationReport::identity(
        format!("cone-mass d={d} m={}", cap.mass()),
        p,
        cap.mass(),
        4.0 * se,
        format!("{n_samples} Gaussian samples, seed {}, tolerance 4 SE", rng.master_seed),
    ))
}

/// `ln [vol(B_{d-2}) / (2^{3/2} π^{d/2})]`.
fn ln_cone_prefactor(d: Dim) -> f64 {
    let k = d.get();
    ball_volume_log(k - 2).expect("k >= 5") - 1.5 * 2f64.ln() - 0.5 * k as f64 * PI.ln()
}

/// Gaussian measure of the spanned cone cut off at the hyperplane offset `η`:
/// `c(d) ∫_0^η e^{-t²/2} γ((d-1)/2, R(t)²/2) dt` with `R` the cone's radius
/// profile.
pub fn truncated_cone_measure(g: &ConeGeometry) -> Result<f64> {
    if g.d.get() < 5 {
        return Err(domain("truncated_cone_measure", "need d >= 5"));
    }
    if !(g.f > 0.0 && g.f < mass_upper_limit(g.d)) {
        return Err(domain("truncated_cone_measure", "mass outside the admissible range"));
    }
    let a = 0.5 * (g.d.as_f64() - 1.0);
    let ln_c = ln_cone_prefactor(g.d);
    let integrand = |t: f64| {
        let r = g.profile(t);
        let lg = ln_lower_inc_gamma(a, 0.5 * r * r).expect("a >= 2");
        (ln_c - 0.5 * t * t + lg).exp()
    };
    let r = integrate(integrand, 0.0, g.eta, QuadTolerance::absolute(1e-14).with_rel(1e-8))?;
    Ok(r.value)
}

/// `(8√5/d) f^{(d-3)/(d-1)}`, the per-cone bound.
pub fn truncated_cone_bound(d: Dim, f: f64) -> f64 {
    let df = d.as_f64();
    8.0 * 5f64.sqrt() / df * f.powf((df - 3.0) / (df - 1.0))
}

pub fn truncated_cone_check(d: Dim, f: f64) -> Result<VerificationReport> {
    let g = ConeGeometry::new(d, f)?;
    let lhs = truncated_cone_measure(&g)?;
    Ok(VerificationReport::inequality(
        format!("truncated-cone d={d} f={f:e}"),
        lhs,
        truncated_cone_bound(d, f),
        0.0,
        format!("h = {:.6}, eta = {:.6}, r = {:.6}", g.offset, g.eta, g.radius_ratio()),
    ))
}

/// Gaussian measure of an intersection of symmetric slabs against the product
/// of their measures.
pub fn sidak_mc(slabs: &[Slab], rng: RngSpec, n_samples: usize) -> Result<VerificationReport> {
    if slabs.is_empty() || slabs.len() > 32 {
        return Err(domain("sidak_mc", "need between 1 and 32 slabs"));
    }
    if n_samples < 100_000 {
        return Err(domain("sidak_mc", "need at least 1e5 samples"));
    }
    let d = slabs[0].normal.len();
    if slabs.iter().any(|s| s.normal.len() != d) {
        return Err(domain("sidak_mc", "slabs must share a dimension"));
    }
    let p = gaussian_hit_fraction(d, rng, n_samples, |x| slabs.iter().all(|s| s.contains(x)));
    let product: f64 = slabs.iter().map(Slab::gaussian_measure).product();
    let se = binomial_se(p, n_samples);
    Ok(VerificationReport::inequality(
        format!("sidak d={d} m={}", slabs.len()),
        product,
        p,
        4.0 * se,
        format!("product of slab measures <= intersection estimate + 4 SE ({n_samples} samples, seed {})", rng.master_seed),
    ))
}

/// Exact measure of `{|x_d| <= N^{-1/(d-1)}}` as
/// `c(d) ∫_0^{arcsin s} cos^{d-2} φ dφ` with `c(d) = 2 vol(∂B_{d-1}) / vol(∂B_d)`.
pub fn zone_quadrature(d: Dim, n: usize) -> Result<f64> {
    if d.get() < 3 || n < 2 {
        return Err(domain("zone_quadrature", "need d >= 3 and N >= 2"));
    }
    let df = d.as_f64();
    let s = (n as f64).powf(-1.0 / (df - 1.0));
    let r = integrate(
        |phi: f64| phi.cos().powf(df - 2.0),
        0.0,
        s.asin(),
        QuadTolerance::absolute(1e-15).with_rel(1e-14),
    )?;
    Ok(zone_coefficient(d) * r.value)
}

/// Same zone measure through the cap mass: `1 - 2 σ(cap of radius arccos s)`.
pub fn zone_via_caps(d: Dim, n: usize) -> Result<f64> {
    let s = (n as f64).powf(-1.0 / (d.as_f64() - 1.0));
    Ok(1.0 - 2.0 * cap_mass_from_radius(d, FRAC_PI_2 - s.asin())?)
}

/// `zone_quadrature <= full` and `full <= simplified` at `(d, N)`.
pub fn zone_chain(d: Dim, n: usize) -> Result<[VerificationReport; 2]> {
    let q = zone_quadrature(d, n)?;
    let z = zone_bound(d, n)?;
    let above = n as f64 >= threshold_n(d)?;
    let note = if above { "N above threshold" } else { "N below threshold" };
    Ok([
        VerificationReport::inequality(format!("zone d={d} N={n}: measure <= full"), q, z.full, 0.0, note),
        VerificationReport::inequality(format!("zone d={d} N={n}: full <= simplified"), z.full, z.simplified, 0.0, note),
    ])
}

const GRID: usize = 100_000;

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

fn ulp(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(x.to_bits() + 1) - x
    }
}

/// Tracks the worst point of an inequality `lhs <= rhs + slack` over a grid.
struct Worst {
    excess: f64,
    lhs: f64,
    rhs: f64,
    slack: f64,
    at: String,
    failures: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            excess: f64::NEG_INFINITY,
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            at: String::new(),
            failures: 0,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64, slack: f64, at: impl FnOnce() -> String) {
        let excess = lhs - rhs - slack;
        if excess > 0.0 {
            self.failures += 1;
        }
        if excess > self.excess {
            self.excess = excess;
            self.lhs = lhs;
            self.rhs = rhs;
            self.slack = slack;
            self.at = at();
        }
    }

    fn report(self, name: &str, points: usize) -> VerificationReport {
        VerificationReport::inequality(
            name,
            self.lhs,
            self.rhs,
            self.slack,
            format!("{points} grid points, {} violations, tightest at {}", self.failures, self.at),
        )
    }
}

/// Deterministic grid checks of the scalar inequalities used in the zone and
/// cone estimates, each with one ulp of slack at the scale of its largest
/// term.
pub fn scalar_inequalities() -> Vec<VerificationReport> {
    let mut out = Vec::new();

    let mut lo = Worst::new();
    let mut hi = Worst::new();
    for t in grid(0.0, 1.0, GRID) {
        let t3 = t * t * t / 6.0;
        let a = t.asin();
        lo.push(t + t3, a, ulp(a.max(t)), || format!("t = {t}"));
        let upper = t + t3 + t.powi(5);
        hi.push(a, upper, ulp(upper), || format!("t = {t}"));
    }
    out.push(lo.report("arcsin lower: t + t^3/6 <= arcsin t", GRID));
    out.push(hi.report("arcsin upper: arcsin t <= t + t^3/6 + t^5", GRID));

    let mut poly = Worst::new();
    for x in grid(0.0, 1.0, GRID) {
        let lhs = (1.0 + x / 6.0 + x * x).powi(5);
        let rhs = 1.0 + 5.0 / 6.0 * x + 47.0 * x * x;
        poly.push(lhs, rhs, ulp(rhs.max(lhs)), || format!("x = {x}"));
    }
    out.push(poly.report("(1 + x/6 + x^2)^5 <= 1 + 5x/6 + 47x^2", GRID));

    let mut binom = Worst::new();
    let mut failing_k = Vec::new();
    let ks: Vec<f64> = (0..=198).map(|i| 1.0 + 0.5 * i as f64).collect();
    for &k in &ks {
        let mut bad = false;
        for u in grid(0.0, 1.0, GRID) {
            let lhs = (1.0 - u).powf(k);
            let quad = 0.5 * k * (k - 1.0) * u * u;
            let rhs = 1.0 - k * u + quad;
            let scale = 1f64.max(k * u).max(quad);
            let before = binom.failures;
            binom.push(lhs, rhs, ulp(scale), || format!("k = {k}, u = {u}"));
            bad |= binom.failures > before;
        }
        if bad {
            failing_k.push(k);
        }
    }
    let mut r = binom.report("(1 - u)^k <= 1 - ku + k(k-1)u^2/2", GRID * ks.len());
    if !failing_k.is_empty() {
        r.detail.push_str(&format!("; failing k: {failing_k:?}"));
    }
    out.push(r);

    out.extend(gauss_tail_sandwich(1.01, 40.0, GRID));
    out
}

/// `(1/h - 1/h³) φ(h) <= Q(h) <= φ(h)/h` on a grid, compared through the
/// Mills ratio `Q/φ` so the far tail does not underflow.
pub fn gauss_tail_sandwich(lo: f64, hi: f64, points: usize) -> [VerificationReport; 2] {
    let mut lower = Worst::new();
    let mut upper = Worst::new();
    for h in grid(lo, hi, points) {
        let mills = gauss_tail_scaled(h);
        let inv = 1.0 / h;
        let below = inv - inv * inv * inv;
        lower.push(below, mills, ulp(inv), || format!("h = {h}"));
        upper.push(mills, inv, ulp(inv), || format!("h = {h}"));
    }
    [
        lower.report("gaussian tail lower: (1/h - 1/h^3) phi <= Q", points),
        upper.report("gaussian tail upper: Q <= phi / h", points),
    ]
}

/// Property checks of the special functions: Lambert W identity, inverse
/// incomplete beta roundtrip, Gaussian tail sandwich, Stirling sandwich and the
/// incomplete gamma bound `γ(a,x) <= x^{a-1}(1 - e^{-x})/a`.
pub fn special_function_checks() -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    let mut at = 0.0;
    let xs = std::iter::once(0.0).chain((-6..=6).map(|e| 10f64.powi(e)));
    for x in xs {
        let w = lambert_w0(x)?;
        let resid = (w * w.exp() - x).abs() / x.max(1.0);
        if resid >= worst {
            worst = resid;
            at = x;
        }
    }
    out.push(VerificationReport::inequality(
        "lambert w identity |w e^w - x| / max(x, 1)",
        worst,
        1e-12,
        0.0,
        format!("x in {{0, 1e-6, ..., 1e6}}, worst at x = {at:e}"),
    ));

    let ps = [1e-8, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999_999];
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0, 0.0);
    for i in 0..100 {
        let a = 0.5 * 1000f64.powf((i % 10) as f64 / 9.0);
        let b = 0.5 * 1000f64.powf((i / 10) as f64 / 9.0);
        let p = ps[(3 * i + i / 10) % 10];
        let x = inv_reg_inc_beta(p, a, b, Tolerance::default())?;
        let err = (reg_inc_beta(x, a, b)? - p).abs() / p;
        if err >= worst {
            worst = err;
            at = (p, a, b);
        }
    }
    out.push(VerificationReport::inequality(
        "incomplete beta roundtrip |I(inv(p)) - p| / p",
        worst,
        1e-10,
        0.0,
        format!("100-point grid, a, b in [0.5, 500]; worst at (p, a, b) = {at:?}"),
    ));

    out.extend(gauss_tail_sandwich(1.01, 40.0, GRID));

    let mut lower = Worst::new();
    let mut upper = Worst::new();
    let n = 20_000;
    for i in 0..n {
        let x = 1e4f64.powf(i as f64 / (n - 1) as f64);
        let lg = log_gamma(x + 1.0)?;
        let base = ln_stirling_lower(x);
        let slack = 8.0 * f64::EPSILON * lg.abs().max(1.0);
        lower.push(base, lg, slack, || format!("x = {x}"));
        upper.push(lg, base + 1.0 / (12.0 * x), slack, || format!("x = {x}"));
    }
    out.push(lower.report("stirling lower (log): sqrt(2 pi x)(x/e)^x <= gamma(x+1)", n));
    out.push(upper.report("stirling upper (log): gamma(x+1) <= sqrt(2 pi x)(x/e)^x e^{1/(12x)}", n));

    let mut gam = Worst::new();
    for i in 0..60 {
        let a = 1.0 + 199.0 * i as f64 / 59.0;
        for j in 1..=200 {
            let x = 50.0 * j as f64 / 200.0;
            let lhs = ln_lower_inc_gamma(a, x)?;
            let rhs = (a - 1.0) * x.ln() + (-f64::exp_m1(-x)).ln() - a.ln();
            gam.push(lhs, rhs, 8.0 * f64::EPSILON * rhs.abs().max(1.0), || format!("a = {a}, x = {x}"));
        }
    }
    out.push(gam.report("incomplete gamma (log): gamma(a,x) <= x^(a-1)(1-e^-x)/a", 60 * 200));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Zone,
    Cone,
    Sidak,
    Scalar,
    Conemass,
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "zone" => Suite::Zone,
            "cone" => Suite::Cone,
            "sidak" => Suite::Sidak,
            "scalar" => Suite::Scalar,
            "conemass" => Suite::Conemass,
            other => return Err(domain("Suite::from_str", format!("unknown suite {other:?}"))),
        })
    }
}

pub fn zone_suite() -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for d in [5, 6, 7] {
        let d = Dim::new(d)?;
        let t = threshold_n(d)?;
        for n in [t.ceil(), (10.0 * t).ceil(), 1e6] {
            out.extend(zone_chain(d, n as usize)?);
        }
    }
    Ok(out)
}

pub fn cone_suite() -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for d in [5, 10, 20, 50, 100] {
        let d = Dim::new(d)?;
        for f in [1e-12, 1e-9, 1e-6, 0.5 * mass_upper_limit(d)] {
            out.push(truncated_cone_check(d, f)?);
        }
    }
    Ok(out)
}

/// Randomized slab family `k`: dimension in 2..=10, 1..=8 slabs, half widths
/// in [0.3, 2.5]; every third family repeats a normal to force correlation.
pub fn sidak_family(rng: RngSpec, k: u64) -> Result<Vec<Slab>> {
    let mut r = rng.substream(2 * k).chunk_rng(0);
    let d = r.random_range(2..=10usize);
    let m = r.random_range(1..=8usize);
    let mut slabs: Vec<Slab> = Vec::with_capacity(m);
    for i in 0..m {
        let mut u = vec![0.0; d];
        if k.is_multiple_of(3) && i > 0 {
            u.copy_from_slice(&slabs[0].normal);
        } else {
            fill_unit(&mut r, &mut u);
        }
        slabs.push(Slab::new(u, r.random_range(0.3..2.5))?);
    }
    Ok(slabs)
}

pub fn sidak_suite(rng: RngSpec, families: u64, n_samples: usize) -> Result<Vec<VerificationReport>> {
    (0..families)
        .map(|k| {
            let slabs = sidak_family(rng, k)?;
            let mut rep = sidak_mc(&slabs, rng.substream(2 * k + 1), n_samples)?;
            rep.name = format!("{} family={k}", rep.name);
            Ok(rep)
        })
        .collect()
}

pub fn conemass_suite(rng: RngSpec, n_samples: usize) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let mut k = 0;
    for d in [3, 10, 50] {
        for m in [1e-3, 0.05, 0.3, 0.5] {
            let mut c = vec![0.0; d];
            c[d - 1] = 1.0;
            out.push(cone_measure_identity_mc(&Cap::new(c, m)?, rng.substream(k), n_samples)?);
            k += 1;
        }
    }
    Ok(out)
}

/// Runs a suite on its default grids.
pub fn run_suite(suite: Suite, rng: RngSpec) -> Result<Vec<VerificationReport>> {
    Ok(match suite {
        Suite::Zone => zone_suite()?,
        Suite::Cone => cone_suite()?,
        Suite::Sidak => sidak_suite(rng, 50, 100_000)?,
        Suite::Scalar => scalar_inequalities(),
        Suite::Conemass => conemass_suite(rng, 100_000)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::Scalar, Suite::Zone, Suite::Cone, Suite::Sidak, Suite::Conemass] {
                all.extend(run_suite(s, rng)?);
            }
            all
        }
    })
}
