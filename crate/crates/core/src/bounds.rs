//! Closed-form bounds on the best partial covering of `S^{d-1}` by `N`
//! congruent caps of mass `α/N` each.
//!
//! The asymptotic remainders of the lower and upper correction terms are
//! replaced by the exact products they come from; the series forms are only
//! used as cross-checks in the tests.
//!
//! Two different constants appear for the cone term. The theorem statement
//! uses `16√5/d` for the upper bound, while the per-cone estimate it rests on
//! ends with `8√5/d`; the factor two accounts for the antipodal pairing. This
//! module uses `16√5/d` throughout; the per-cone `8√5/d` check lives in
//! [`crate::verify`].

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::cap::{sphere_area_log, Dim};
use crate::error::{domain, Result};
use crate::quadrature::{integrate, integrate_simpson, QuadTolerance};

/// Reference covering density of the Erdős–Few–Rogers construction.
pub const EFR_REFERENCE: f64 = 0.92334;

pub fn efr_reference() -> f64 {
    EFR_REFERENCE
}

/// `ln(1 - x) + x`, accurate for small `x` where the two terms cancel.
fn ln1m_plus(x: f64) -> f64 {
    if x < 0.05 {
        // -(x²/2 + x³/3 + ...)
        let mut term = x * x;
        let mut sum = 0.0;
        let mut k = 2.0;
        loop {
            let add = term / k;
            sum += add;
            if add <= sum * 1e-17 {
                break;
            }
            term *= x;
            k += 1.0;
        }
        -sum
    } else {
        f64::ln_1p(-x) + x
    }
}

/// `e^{-α} - (1 - x)^m` with `m x = α`, without cancellation.
fn exp_gap(alpha: f64, x: f64, m: f64) -> f64 {
    if x >= 1.0 {
        return (-alpha).exp();
    }
    -(-alpha).exp() * f64::exp_m1(m * ln1m_plus(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TheoremInputs {
    pub d: Dim,
    pub n: usize,
    pub alpha: f64,
}

impl TheoremInputs {
    pub fn new(d: Dim, n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("TheoremInputs::new", "need N >= 1"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(domain("TheoremInputs::new", format!("need 0 < alpha <= 1, got {alpha}")));
        }
        if alpha / n as f64 >= 1.0 {
            return Err(domain("TheoremInputs::new", "need alpha / N < 1"));
        }
        Ok(TheoremInputs { d, n, alpha })
    }
}

/// Exact excess of the random-covering expectation over its limit:
/// `(1 - (1 - α/N)^N) - (1 - e^{-α}) = e^{-α} - (1 - α/N)^N`.
pub fn beta_lower(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || !(alpha > 0.0) || alpha > n as f64 {
        return Err(domain("beta_lower", "need N >= 1 and 0 < alpha <= N"));
    }
    let nf = n as f64;
    Ok(exp_gap(alpha, alpha / nf, nf))
}

/// `√(2d/π) (α/N)^{1/(d-1)} + [e^{-α} - (1 - 2α/N)^{N/2}]⁺`.
pub fn alpha_correction(d: Dim, n: usize, alpha: f64) -> Result<f64> {
    if d.get() < 3 {
        return Err(domain("alpha_correction", "need d >= 3"));
    }
    if n == 0 || !(alpha > 0.0) {
        return Err(domain("alpha_correction", "need N >= 1 and alpha > 0"));
    }
    let df = d.as_f64();
    let nf = n as f64;
    let zone = (2.0 * df / PI).sqrt() * (alpha / nf).powf(1.0 / (df - 1.0));
    let sidak = exp_gap(alpha, 2.0 * alpha / nf, 0.5 * nf).max(0.0);
    Ok(zone + sidak)
}

/// `(16√5/d) α^{(d-3)/(d-1)}`.
pub fn cone_term(d: Dim, alpha: f64) -> Result<f64> {
    if d.get() < 4 {
        return Err(domain("cone_term", "need d >= 4"));
    }
    if !(alpha > 0.0) {
        return Err(domain("cone_term", "need alpha > 0"));
    }
    let df = d.as_f64();
    Ok(16.0 * 5f64.sqrt() / df * alpha.powf((df - 3.0) / (df - 1.0)))
}

/// `(15(d-2)(d-4) / (2(d-3)))^{(d-1)/2}`; `1` for `d = 4`, where the base
/// vanishes. Overflows to `+inf` for large `d`.
pub fn threshold_n(d: Dim) -> Result<f64> {
    let k = d.get();
    if k <= 3 {
        return Err(domain("threshold_n", "need d >= 4"));
    }
    if k == 4 {
        return Ok(1.0);
    }
    let df = k as f64;
    let base = 15.0 * (df - 2.0) * (df - 4.0) / (2.0 * (df - 3.0));
    Ok((0.5 * (df - 1.0) * base.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ZoneBound {
    pub full: f64,
    pub simplified: f64,
}

/// `2 vol(∂B_{d-1}) / vol(∂B_d)`, the density of the last coordinate at 0.
pub fn zone_coefficient(d: Dim) -> f64 {
    let k = d.get();
    (2f64.ln() + sphere_area_log(k - 1).expect("k >= 3") - sphere_area_log(k).expect("k >= 3")).exp()
}

/// Upper bounds on the measure of the zone `{|x_d| <= N^{-1/(d-1)}}`.
pub fn zone_bound(d: Dim, n: usize) -> Result<ZoneBound> {
    if d.get() < 5 {
        return Err(domain("zone_bound", "need d >= 5"));
    }
    if n < 2 {
        return Err(domain("zone_bound", "need N >= 2"));
    }
    let df = d.as_f64();
    let s = (n as f64).powf(-1.0 / (df - 1.0));
    let s2 = s * s;
    let poly = s * (1.0 - (df - 3.0) / 6.0 * s2 + 1.25 * (df - 2.0) * (df - 4.0) * s2 * s2);
    Ok(ZoneBound {
        full: zone_coefficient(d) * poly,
        simplified: (2.0 * df / PI).sqrt() * s,
    })
}

/// `∏ (1 - 2 f_i)`, accumulated in log space.
pub fn sidak_product_bound(masses: &[f64]) -> Result<f64> {
    let mut ln = 0.0;
    for &f in masses {
        if !(f > 0.0 && f < 0.5) {
            return Err(domain("sidak_product_bound", format!("pair mass {f} outside (0, 1/2)")));
        }
        ln += f64::ln_1p(-2.0 * f);
    }
    Ok(ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub inputs: TheoremInputs,
    pub base: f64,
    pub beta_n: f64,
    pub alpha_n: f64,
    pub cone_term: f64,
    pub zone_term: f64,
    pub threshold_n: f64,
    pub lower: f64,
    pub upper: f64,
    pub precondition_met: bool,
}

/// All terms of the two-sided bound for `(d, N, α)`. `zone_term` is the full
/// zone estimate at `N`; `alpha_n` already contains the simplified one.
pub fn theorem_bounds(inputs: TheoremInputs) -> Result<BoundReport> {
    let TheoremInputs { d, n, alpha } = inputs;
    if d.get() < 5 {
        return Err(domain("theorem_bounds", "need d >= 5"));
    }
    let base = -f64::exp_m1(-alpha);
    let beta_n = beta_lower(n, alpha)?;
    let alpha_n = alpha_correction(d, n, alpha)?;
    let cone = cone_term(d, alpha)?;
    let zone_term = zone_bound(d, n.max(2))?.full;
    let threshold = threshold_n(d)?;
    Ok(BoundReport {
        inputs,
        base,
        beta_n,
        alpha_n,
        cone_term: cone,
        zone_term,
        threshold_n: threshold,
        lower: base + beta_n,
        upper: base + cone + alpha_n,
        precondition_met: n as f64 >= threshold,
    })
}

/// Upper bound after `N → ∞` at fixed `d`: `1 - e^{-α} + (16√5/d) α^{(d-3)/(d-1)}`.
pub fn upper_limit_large_n(d: Dim, alpha: f64) -> Result<f64> {
    Ok(-f64::exp_m1(-alpha) + cone_term(d, alpha)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EulerRow {
    pub d: Dim,
    /// `1 - e^{-1}`
    pub coverage_lower: f64,
    /// `1 - e^{-1} + 16√5/d`
    pub coverage_upper: f64,
    /// `1 / (1 - coverage_lower)`, which is `e`
    pub e_lower: f64,
    /// `1 / (1 - coverage_upper)`; infinite once the coverage bracket reaches 1
    pub e_upper: f64,
    pub e_width: f64,
}

/// For `α = 1` and `N → ∞`: the bracket on the limiting covered fraction and
/// the induced bracket `[1/(1-lower), 1/(1-upper)]` around `e`.
pub fn euler_report(d_grid: &[Dim]) -> Result<Vec<EulerRow>> {
    d_grid
        .iter()
        .map(|&d| {
            if d.get() < 5 {
                return Err(domain("euler_report", "need d >= 5"));
            }
            let lower = -f64::exp_m1(-1.0);
            let excess = cone_term(d, 1.0)?;
            // 1 - lower is e^{-1}; subtract the excess there to avoid cancellation.
            let gap = (-1.0f64).exp() - excess;
            let e_upper = if gap > 0.0 { 1.0 / gap } else { f64::INFINITY };
            Ok(EulerRow {
                d,
                coverage_lower: lower,
                coverage_upper: lower + excess,
                e_lower: E,
                e_upper,
                e_width: e_upper - E,
            })
        })
        .collect()
}

/// Quadrature scheme for the random-polytope constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussKronrod,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LdivTerms {
    pub scheme: Scheme,
    /// `∫_0^1 (1 - 2^{-t}) / t dt`
    pub first: f64,
    /// `∫_0^T 2^{-e^t} dt`
    pub second: f64,
    pub truncation: f64,
    /// Bound on the dropped `∫_T^∞ 2^{-e^t} dt`.
    pub remainder_bound: f64,
    pub quadrature_error: f64,
    pub sum: f64,
    /// `sum / (πe)`
    pub value: f64,
}

fn ldiv_first(t: f64) -> f64 {
    if t == 0.0 {
        LN_2
    } else {
        -f64::exp_m1(-t * LN_2) / t
    }
}

fn ldiv_second(t: f64) -> f64 {
    (-t.exp() * LN_2).exp()
}

/// Both integrals of the random-polytope constant under one scheme. The
/// second integral stops at `T = ln(18 ln 10 / ln 2)`, where the integrand
/// drops to `1e-18`; substituting `u = e^t` bounds the rest by
/// `2^{-U} / (U ln 2)` with `U = e^T`.
pub fn ldiv_terms(scheme: Scheme) -> Result<LdivTerms> {
    let u = 18.0 * std::f64::consts::LN_10 / LN_2;
    let truncation = u.ln();
    let remainder_bound = (-u * LN_2).exp() / (u * LN_2);
    let (first, second) = match scheme {
        Scheme::GaussKronrod => {
            let tol = QuadTolerance::absolute(1e-14);
            (
                integrate(ldiv_first, 0.0, 1.0, tol)?,
                integrate(ldiv_second, 0.0, truncation, tol)?,
            )
        }
        Scheme::Simpson => (
            integrate_simpson(ldiv_first, 0.0, 1.0, 1e-13)?,
            integrate_simpson(ldiv_second, 0.0, truncation, 1e-13)?,
        ),
    };
    let sum = first.value + second.value;
    Ok(LdivTerms {
        scheme,
        first: first.value,
        second: second.value,
        truncation,
        remainder_bound,
        quadrature_error: first.error + second.error,
        sum,
        value: sum / (PI * E),
    })
}

/// `(πe)^{-1} (∫_0^1 (1 - 2^{-t})/t dt + ∫_0^∞ 2^{-e^t} dt) ≈ 0.11336`.
pub fn ldiv_upper_constant() -> Result<f64> {
    Ok(ldiv_terms(Scheme::GaussKronrod)?.value)
}
