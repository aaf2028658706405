//! One-dimensional adaptive quadrature.
//!
//! Two unrelated schemes are provided so that one can serve as an oracle for
//! the other: globally adaptive Gauss–Kronrod (7/15 points) and recursive
//! Simpson with Richardson extrapolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Stop when the estimated error is below `max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadTolerance {
    pub fn absolute(abs_tol: f64) -> Self {
        QuadTolerance {
            abs_tol,
            rel_tol: 0.0,
            max_subdivisions: 4000,
        }
    }

    pub fn with_rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639,
    0.949_107_912_342_758_525,
    0.864_864_423_359_769_073,
    0.741_531_185_599_394_440,
    0.586_087_235_467_691_130,
    0.405_845_151_377_397_167,
    0.207_784_955_007_898_468,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_184,
    0.140_653_259_715_525_919,
    0.169_004_726_639_267_903,
    0.190_350_578_064_785_410,
    0.204_432_940_075_298_892,
    0.209_482_141_084_727_828,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693,
    0.279_705_391_489_276_668,
    0.381_830_050_505_118_945,
    0.417_959_183_673_469_388,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate meets the tolerance or `max_subdivisions` is reached; in the latter
/// case `converged` is false and the best estimate is still returned.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integrate", "limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    if a > b {
        let r = integrate(f, b, a, tol)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    let first = gk15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > tol.target(value) && heap.len() < tol.max_subdivisions {
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer divisible in floating point.
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
        converged: error <= tol.target(value),
    })
}

/// Adaptive Simpson with Richardson extrapolation. Evaluates endpoints, so the
/// integrand must be finite on the closed interval.
pub fn integrate_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || !(abs_tol > 0.0) {
        return Err(domain("integrate_simpson", "need finite limits and abs_tol > 0"));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut state = SimpsonState {
        evaluations: 3,
        error: 0.0,
        converged: true,
    };
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, abs_tol, 60, &mut state);
    Ok(QuadResult {
        value,
        error: state.error,
        evaluations: state.evaluations,
        converged: state.converged,
    })
}

struct SimpsonState {
    evaluations: usize,
    error: f64,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut SimpsonState,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 {
            state.converged = false;
        }
        state.error += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadTolerance::absolute(1e-14)).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
        assert!(r.converged);
        let s = integrate_simpson(|x| 3.0 * x * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((s.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| x.sin(), 0.0, PI, QuadTolerance::absolute(1e-14)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let g = integrate(|x| (-x * x).exp(), -10.0, 10.0, QuadTolerance::absolute(1e-14)).unwrap();
        assert!((g.value - PI.sqrt()).abs() < 1e-13);
        let s = integrate_simpson(|x| (-x * x).exp(), -10.0, 10.0, 1e-13).unwrap();
        assert!((s.value - PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let r = integrate(|x| x, 1.0, 0.0, QuadTolerance::absolute(1e-14)).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
        assert_eq!(integrate(|x| x, 1.0, 1.0, QuadTolerance::absolute(1e-14)).unwrap().value, 0.0);
    }

    #[test]
    fn rejects_infinite_limits() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, QuadTolerance::absolute(1e-9)).is_err());
    }

    #[test]
    fn endpoint_singularity_with_gk() {
        // ∫_0^1 x^{-1/2} = 2; GK never touches the endpoint.
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadTolerance::absolute(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }
}
