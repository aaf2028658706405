//! Scalar special functions.
//!
//! Everything is evaluated in log space where magnitudes can leave the `f64`
//! range: ball-volume ratios in dimension `10^5` involve `Γ(5·10^4)`, and the
//! Gaussian tail at the offsets used for tiny caps sits far below `1e-300`.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Convergence controls for iterative inverses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerance {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel_tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn new(rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || max_iter == 0 {
            return Err(domain(
                "Tolerance::new",
                format!("need relTol > 0 and maxIter >= 1, got {rel_tol}, {max_iter}"),
            ));
        }
        Ok(Tolerance { rel_tol, max_iter })
    }
}

// Stirling series coefficients B_{2k} / (2k (2k-1)), k = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Below this the Stirling series is not used directly; arguments are shifted up.
const STIRLING_MIN: f64 = 10.0;

/// `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]` for `x >= 10`.
pub(crate) fn stirling_correction(x: f64) -> f64 {
    debug_assert!(x >= STIRLING_MIN);
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Horner in 1/x^2, then one factor of 1/x.
    let mut acc = 0.0;
    for &c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x >= STIRLING_MIN {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_correction(x);
    }
    // Γ(x) = Γ(x + n) / (x (x+1) ... (x+n-1))
    let mut y = x;
    let mut prod = 1.0;
    while y < STIRLING_MIN {
        prod *= y;
        y += 1.0;
    }
    (y - 0.5) * y.ln() - y + LN_SQRT_2PI + stirling_correction(y) - prod.ln()
}

/// ln Γ(x) for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("need finite x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

/// ln B(a, b), organised so that large arguments do not cancel catastrophically.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain("ln_beta", format!("need a, b > 0, got {a}, {b}")));
    }
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let s = p + q;
    let v = if p >= STIRLING_MIN {
        let corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(s);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / s).ln() + q * (-p / s).ln_1p()
    } else if q >= STIRLING_MIN {
        let corr = stirling_correction(q) - stirling_correction(s);
        ln_gamma_unchecked(p) + corr + p - p * s.ln() + (q - 0.5) * (-p / s).ln_1p()
    } else {
        ln_gamma_unchecked(p) + ln_gamma_unchecked(q) - ln_gamma_unchecked(s)
    };
    Ok(v)
}

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        op: "reg_inc_beta",
        iterations: CF_MAX_ITER,
        lo: x,
        hi: x,
    })
}

fn check_beta_args(op: &'static str, x: f64, a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(op, format!("need 0 <= x <= 1, got {x}")));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(op, format!("need a, b > 0, got {a}, {b}")));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_beta_args("reg_inc_beta", x, a, b)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b)?;
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x)? / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x)? / b
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Starting point for the inverse incomplete beta (Abramowitz–Stegun 26.5.22
/// for `a, b >= 1`, a power-law tail guess otherwise).
fn inv_beta_guess(p: f64, a: f64, b: f64) -> f64 {
    let x = if a >= 1.0 && b >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if p < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h
            - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            (a * w * p).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - p)).powf(1.0 / b)
        }
    };
    if x.is_finite() && x > 0.0 && x < 1.0 {
        x
    } else {
        0.5
    }
}

/// Inverse of [`reg_inc_beta`] in `x`: bracketed bisection refined by Newton steps.
///
/// Converges when `|I_x(a,b) - p| <= relTol * max(p, 1e-300)` or when the
/// bracket has shrunk to adjacent floating-point numbers.
pub fn inv_reg_inc_beta(p: f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    check_beta_args("inv_reg_inc_beta", p, a, b)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let ln_b = ln_beta(a, b)?;
    let target = tol.rel_tol * p.max(1e-300);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = inv_beta_guess(p, a, b);
    let mut best = (f64::INFINITY, x);
    for _ in 0..tol.max_iter {
        let f = reg_inc_beta(x, a, b)? - p;
        if f.abs() < best.0 {
            best = (f.abs(), x);
        }
        if f.abs() <= target {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(best.1);
        }
        let ln_deriv = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b;
        let step = f / ln_deriv.exp();
        let newton = x - step;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo == 0.0 {
            hi / 16.0
        } else if hi > 8.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NoConvergence {
        op: "inv_reg_inc_beta",
        iterations: tol.max_iter,
        lo,
        hi,
    })
}

/// Series for the regularized lower incomplete gamma `P(a, x)`, returned as
/// `ln P`. Valid for `x < a + 1`.
fn ln_gamma_p_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..CF_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * CF_EPS {
            return Ok(-x + a * x.ln() - ln_gamma_unchecked(a) + sum.ln());
        }
    }
    Err(Error::NoConvergence {
        op: "lower_inc_gamma",
        iterations: CF_MAX_ITER,
        lo: x,
        hi: x,
    })
}

/// Legendre continued fraction for `Γ(a, x) e^x x^{-a}` (modified Lentz).
/// Converges quickly for `x > a + 1`.
fn gamma_q_cf(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        op: "gamma_q_cf",
        iterations: CF_MAX_ITER,
        lo: x,
        hi: x,
    })
}

/// `ln γ(a, x)` for `a >= 1`, `x >= 0` (`-inf` at `x = 0`).
pub fn ln_lower_inc_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(domain(
            "lower_inc_gamma",
            format!("supported range is a >= 1, got {a}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(domain("lower_inc_gamma", format!("need x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return Ok(ln_gamma_unchecked(a));
    }
    let ln_p = if x < a + 1.0 {
        ln_gamma_p_series(a, x)?
    } else {
        let ln_q = -x + a * x.ln() - ln_gamma_unchecked(a) + gamma_q_cf(a, x)?.ln();
        (-ln_q.exp()).ln_1p()
    };
    Ok(ln_gamma_unchecked(a) + ln_p)
}

/// Lower incomplete gamma `γ(a, x) = ∫_0^x s^{a-1} e^{-s} ds` for `a >= 1`.
///
/// Overflows to `+inf` once `Γ(a)` does (around `a = 171`); use
/// [`ln_lower_inc_gamma`] beyond that.
pub fn lower_inc_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(ln_lower_inc_gamma(a, x)?.exp())
}

/// Standard normal density.
pub fn gauss_density(h: f64) -> f64 {
    (-0.5 * h * h - LN_SQRT_2PI).exp()
}

/// Threshold between the erf series and the continued fraction.
const TAIL_SWITCH: f64 = 2.0;

/// erf(z) by the all-positive-terms series
/// `erf z = 2/√π e^{-z²} Σ 2^n z^{2n+1} / (1·3···(2n+1))`.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-z2).exp() * sum
}

/// Mills ratio `R(h) = Q(h) / φ(h)` for `h >= 0`; the scaled complementary
/// error function in Gaussian units. Finite for every finite `h`.
pub fn gauss_tail_scaled(h: f64) -> f64 {
    debug_assert!(h >= 0.0);
    if h >= TAIL_SWITCH {
        // Q(h) = Γ(1/2, h²/2) / (2√π), and the CF returns Γ(a,x) e^x x^{-a}.
        let x = 0.5 * h * h;
        let cf = gamma_q_cf(0.5, x).expect("Legendre fraction converges for x > 1.5");
        0.5 * h * cf
    } else {
        let q = 0.5 * (1.0 - erf_series(h / std::f64::consts::SQRT_2));
        q / gauss_density(h)
    }
}

/// Gaussian upper tail `Q(h) = γ_1([h, ∞))`.
pub fn gauss_tail(h: f64) -> f64 {
    if h.is_nan() {
        return f64::NAN;
    }
    if h < 0.0 {
        return 1.0 - gauss_tail(-h);
    }
    if h.is_infinite() {
        return 0.0;
    }
    if h >= TAIL_SWITCH {
        ln_gauss_tail(h).exp()
    } else {
        0.5 * (1.0 - erf_series(h / std::f64::consts::SQRT_2))
    }
}

/// `ln Q(h)`, finite far beyond the point where `Q(h)` underflows.
pub fn ln_gauss_tail(h: f64) -> f64 {
    if h < TAIL_SWITCH {
        return gauss_tail(h).ln();
    }
    gauss_tail_scaled(h).ln() - 0.5 * h * h - LN_SQRT_2PI
}

/// Principal branch `W_0(x)` of the Lambert W function for `x >= 0`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("lambert_w0", format!("need x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x <= std::f64::consts::E {
        // Winitzki-style start near the origin.
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    let tol = Tolerance::default();
    for _ in 0..tol.max_iter {
        let step = if w > 1.0 {
            // Newton on g(w) = w + ln w - ln x: no overflow for large x.
            let g = w + w.ln() - x.ln();
            let g1 = 1.0 + 1.0 / w;
            let g2 = -1.0 / (w * w);
            // Halley correction
            g / (g1 - 0.5 * g * g2 / g1)
        } else {
            let ew = w.exp();
            let f = w * ew - x;
            let wp1 = w + 1.0;
            f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        };
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// `W_0(e^l)`, for arguments whose exponential would overflow.
pub fn lambert_w0_of_exp(l: f64) -> Result<f64> {
    if l.is_nan() {
        return Err(domain("lambert_w0_of_exp", "argument is NaN"));
    }
    if l < 700.0 {
        return lambert_w0(l.exp());
    }
    // w + ln w = l
    let mut w = l - l.ln();
    for _ in 0..Tolerance::default().max_iter {
        let g = w + w.ln() - l;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}

/// ln of the Stirling lower bound `√(2πx) (x/e)^x` for `Γ(x + 1)`.
pub fn ln_stirling_lower(x: f64) -> f64 {
    0.5 * (2.0 * PI * x).ln() + x * (x.ln() - 1.0)
}
