//! Geodesic caps on `S^{d-1}` and the Gaussian half-space picture of a cap.
//!
//! A cap is described redundantly by its normalized mass `σ(C)` (with
//! `σ(S^{d-1}) = 1`), its geodesic radius `θ`, and the cosine threshold
//! `cos θ` used in membership tests. The Gaussian offset `h` of a cap is tied
//! to it only through the mass: `Q(h) = σ(C)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{
    gauss_tail_scaled, inv_reg_inc_beta, lambert_w0_of_exp, ln_gauss_tail, log_gamma,
    reg_inc_beta, Tolerance, LN_SQRT_2PI,
};

/// Ambient dimension `d >= 2` of `R^d`; caps live on `S^{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(domain("Dim::new", format!("dimension must be >= 2, got {d}")));
        }
        Ok(Dim(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `ln vol_k(B_k) = (k/2) ln π - ln Γ(k/2 + 1)`.
pub fn ball_volume_log(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain("ball_volume_log", "dimension must be >= 1"));
    }
    let half = 0.5 * k as f64;
    Ok(half * PI.ln() - log_gamma(half + 1.0)?)
}

/// `ln vol_{d-1}(∂B_d) = ln d + ln vol_d(B_d)`.
pub fn sphere_area_log(d: usize) -> Result<f64> {
    Ok((d as f64).ln() + ball_volume_log(d)?)
}

/// `ln [Γ(d/2) / (√π Γ((d-1)/2))]`, the normalizer of the latitude density
/// `sin^{d-2} θ` on `[0, π]`.
fn ln_latitude_norm(d: Dim) -> f64 {
    let d = d.as_f64();
    log_gamma(0.5 * d).expect("d >= 2") - 0.5 * PI.ln() - log_gamma(0.5 * (d - 1.0)).expect("d >= 2")
}

/// Normalized surface measure of a cap of geodesic radius `theta`.
pub fn cap_mass_from_radius(d: Dim, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(domain(
            "cap_mass_from_radius",
            format!("need 0 < theta <= pi, got {theta}"),
        ));
    }
    Ok(cap_mass_unchecked(d, theta))
}

fn cap_mass_unchecked(d: Dim, theta: f64) -> f64 {
    if theta >= PI {
        return 1.0;
    }
    if theta == FRAC_PI_2 {
        return 0.5;
    }
    if theta > FRAC_PI_2 {
        return 1.0 - cap_mass_unchecked(d, PI - theta);
    }
    let s = theta.sin();
    let a = 0.5 * (d.as_f64() - 1.0);
    0.5 * reg_inc_beta(s * s, a, 0.5).expect("arguments are in range")
}

/// Geodesic radius of the cap with normalized mass `m`.
pub fn radius_from_mass(d: Dim, m: f64) -> Result<f64> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(domain("radius_from_mass", format!("need 0 < m <= 1, got {m}")));
    }
    if m == 1.0 {
        return Ok(PI);
    }
    if m == 0.5 {
        return Ok(FRAC_PI_2);
    }
    if m > 0.5 {
        return Ok(PI - radius_from_mass(d, 1.0 - m)?);
    }
    let a = 0.5 * (d.as_f64() - 1.0);
    let x = inv_reg_inc_beta(2.0 * m, a, 0.5, Tolerance::default())?;
    let mut theta = x.sqrt().asin();
    // Polish in θ directly; dm/dθ = norm · sin^{d-2} θ.
    let ln_norm = ln_latitude_norm(d);
    for _ in 0..3 {
        let r = cap_mass_unchecked(d, theta) - m;
        if r.abs() <= 1e-15 * m {
            break;
        }
        let ln_deriv = ln_norm + (d.as_f64() - 2.0) * theta.sin().ln();
        let next = theta - r / ln_deriv.exp();
        if !(next.is_finite() && next > 0.0 && next <= FRAC_PI_2) {
            break;
        }
        theta = next;
    }
    let achieved = cap_mass_unchecked(d, theta);
    if (achieved - m).abs() > 1e-10 * m {
        return Err(Error::NoConvergence {
            op: "radius_from_mass",
            iterations: 3,
            lo: theta,
            hi: theta,
        });
    }
    Ok(theta)
}

/// Offset `h > 0` of the hyperplane whose far half-space has Gaussian mass `f`,
/// i.e. the solution of `Q(h) = f`.
pub fn gaussian_halfspace_offset(f: f64) -> Result<f64> {
    if !(f > 0.0 && f < 0.5) {
        return Err(domain(
            "gaussian_halfspace_offset",
            format!("need 0 < f < 1/2, got {f}"),
        ));
    }
    let target = f.ln();
    // The tail bound Q(h) <= φ(h)/h puts the root below η.
    let mut lo = 0.0;
    let mut hi = eta_bound(f)?.max(1e-300);
    let mut h = hi;
    for _ in 0..200 {
        let g = ln_gauss_tail(h) - target;
        if g.abs() <= 1e-14 {
            return Ok(h);
        }
        if g > 0.0 {
            lo = h;
        } else {
            hi = h;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(h);
        }
        // d/dh ln Q(h) = -1 / R(h)
        let next = h + g * gauss_tail_scaled(h);
        h = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NoConvergence {
        op: "gaussian_halfspace_offset",
        iterations: 200,
        lo,
        hi,
    })
}

/// Lambert-W height bound `η = √W((√(2π) f)^{-2})`, which dominates the
/// Gaussian offset of a cap of mass `f`.
pub fn eta_bound(f: f64) -> Result<f64> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(domain("eta_bound", format!("need f > 0, got {f}")));
    }
    // ln of the W argument: -2 ln(√(2π) f)
    let l = -2.0 * (LN_SQRT_2PI + f.ln());
    Ok(lambert_w0_of_exp(l)?.sqrt())
}

/// Largest admissible pair mass for the antipodal covering estimate:
/// `0.9^{(d-1)/2} vol(B_{d-1}) / vol(∂B_d)`.
pub fn mass_upper_limit(d: Dim) -> f64 {
    let k = d.get();
    let ln = 0.5 * (k as f64 - 1.0) * 0.9f64.ln() + ball_volume_log(k - 1).expect("k >= 2")
        - sphere_area_log(k).expect("k >= 2");
    ln.exp()
}

/// A geodesic cap `{x ∈ S^{d-1} : <x, center> >= cos θ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    center: Vec<f64>,
    mass: f64,
    geodesic_radius: f64,
    cos_threshold: f64,
}

const UNIT_NORM_TOL: f64 = 1e-12;

fn check_center(op: &'static str, center: &[f64]) -> Result<Dim> {
    let d = Dim::new(center.len())?;
    let norm = center.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
        return Err(domain(op, format!("center must be a unit vector, |center| = {norm}")));
    }
    Ok(d)
}

impl Cap {
    /// Cap of normalized mass `mass` around a unit-length `center`.
    pub fn new(center: Vec<f64>, mass: f64) -> Result<Self> {
        let d = check_center("Cap::new", &center)?;
        let geodesic_radius = radius_from_mass(d, mass)?;
        let cos_threshold = if mass == 0.5 { 0.0 } else { geodesic_radius.cos() };
        Ok(Cap {
            center,
            mass,
            geodesic_radius,
            cos_threshold,
        })
    }

    /// Cap of geodesic radius `theta` around a unit-length `center`.
    pub fn from_radius(center: Vec<f64>, theta: f64) -> Result<Self> {
        let d = check_center("Cap::from_radius", &center)?;
        let mass = cap_mass_from_radius(d, theta)?;
        let cos_threshold = if theta == FRAC_PI_2 { 0.0 } else { theta.cos() };
        Ok(Cap {
            center,
            mass,
            geodesic_radius: theta,
            cos_threshold,
        })
    }

    /// Like [`Cap::new`] but normalizes a nonzero `direction` first.
    pub fn around(mut direction: Vec<f64>, mass: f64) -> Result<Self> {
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(domain("Cap::around", "direction must be nonzero and finite"));
        }
        direction.iter_mut().for_each(|c| *c /= norm);
        Cap::new(direction, mass)
    }

    /// Same cap with the center moved; the radius and mass carry over.
    pub(crate) fn with_center(&self, center: Vec<f64>) -> Cap {
        debug_assert_eq!(center.len(), self.center.len());
        Cap {
            center,
            ..self.clone()
        }
    }

    pub fn antipode(&self) -> Cap {
        self.with_center(self.center.iter().map(|c| -c).collect())
    }

    pub fn dim(&self) -> Dim {
        Dim(self.center.len())
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn geodesic_radius(&self) -> f64 {
        self.geodesic_radius
    }

    pub fn cos_threshold(&self) -> f64 {
        self.cos_threshold
    }

    pub fn is_full(&self) -> bool {
        self.mass >= 1.0
    }

    /// Membership of a unit vector `p`.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        self.is_full() || dot(&self.center, p) >= self.cos_threshold
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Gaussian picture of a cap of mass `f`: the half-space offset `h` with
/// `Q(h) = f` and its Lambert-W upper bound `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConeGeometry {
    pub d: Dim,
    pub f: f64,
    pub offset: f64,
    pub eta: f64,
}

impl ConeGeometry {
    /// Requires `0 < f < mass_upper_limit(d)`.
    pub fn new(d: Dim, f: f64) -> Result<Self> {
        let limit = mass_upper_limit(d);
        if !(f > 0.0 && f < limit) {
            return Err(domain(
                "ConeGeometry::new",
                format!("need 0 < f < {limit:e} (mass upper limit for d = {d}), got {f}"),
            ));
        }
        let offset = gaussian_halfspace_offset(f)?;
        let eta = eta_bound(f)?;
        debug_assert!(offset <= eta * (1.0 + 1e-12));
        Ok(ConeGeometry { d, f, offset, eta })
    }

    /// `r = (f vol(∂B_d) / vol(B_{d-1}))^{1/(d-1)}`, below `√0.9` inside the
    /// admissible mass range.
    pub fn radius_ratio(&self) -> f64 {
        let k = self.d.get();
        let ln = self.f.ln() + sphere_area_log(k).expect("k >= 2")
            - ball_volume_log(k - 1).expect("k >= 2");
        (ln / (k as f64 - 1.0)).exp()
    }

    /// Radius profile `R_{d,f}(t) = r t / √(1 - r²)` of the truncated cone.
    pub fn profile(&self, t: f64) -> f64 {
        let r = self.radius_ratio();
        r * t / (1.0 - r * r).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gauss_tail;
    use proptest::prelude::*;

    fn dim(d: usize) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn dim_rejects_small() {
        assert!(Dim::new(1).is_err());
        assert!(Dim::new(0).is_err());
        assert_eq!(Dim::new(2).unwrap().get(), 2);
    }

    #[test]
    fn cap_mass_special_values() {
        for d in [2, 3, 7, 50, 1000] {
            assert_eq!(cap_mass_from_radius(dim(d), PI).unwrap(), 1.0);
            assert_eq!(cap_mass_from_radius(dim(d), FRAC_PI_2).unwrap(), 0.5);
        }
        for theta in [0.1, 1.0, 2.5, 3.1] {
            let m = cap_mass_from_radius(dim(2), theta).unwrap();
            assert!((m - theta / PI).abs() < 1e-14, "{theta}: {m}");
        }
        // S^2: Archimedes, cap area fraction (1 - cos θ)/2
        for theta in [0.01, 0.7, 2.0] {
            let m = cap_mass_from_radius(dim(3), theta).unwrap();
            assert!((m - (1.0 - f64::cos(theta)) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cap_mass_domain() {
        assert!(cap_mass_from_radius(dim(3), 0.0).is_err());
        assert!(cap_mass_from_radius(dim(3), 3.2).is_err());
    }

    #[test]
    fn radius_from_mass_values() {
        assert_eq!(radius_from_mass(dim(9), 0.5).unwrap(), FRAC_PI_2);
        for m in [1e-9, 0.013, 0.25, 0.8] {
            assert!((radius_from_mass(dim(2), m).unwrap() - PI * m).abs() < 1e-13 * PI);
        }
        assert!(radius_from_mass(dim(3), 0.0).is_err());
        assert!(radius_from_mass(dim(3), 1.5).is_err());
    }

    #[test]
    fn mass_radius_roundtrip_grid() {
        for d in (2..=200).step_by(11).chain([200]) {
            for e in 0..=12 {
                for m in [10f64.powi(-e), 0.37 * 10f64.powi(-e)] {
                    let theta = radius_from_mass(dim(d), m).unwrap();
                    let back = cap_mass_from_radius(dim(d), theta).unwrap();
                    assert!(((back - m) / m).abs() <= 1e-10, "d={d} m={m} back={back}");
                }
            }
        }
    }

    #[test]
    fn halfspace_offset_inverts_tail() {
        let f = gauss_tail(1.0);
        assert!((gaussian_halfspace_offset(f).unwrap() - 1.0).abs() < 1e-12);
        for f in [1e-300, 1e-40, 1e-12, 1e-3, 0.2, 0.49] {
            let h = gaussian_halfspace_offset(f).unwrap();
            let back = ln_gauss_tail(h);
            assert!((back - f.ln()).abs() < 1e-12, "f={f}");
        }
        let h = gaussian_halfspace_offset(0.5 - 1e-12).unwrap();
        assert!(h > 0.0 && h < 1e-11);
        assert!(gaussian_halfspace_offset(0.5).is_err());
        assert!(gaussian_halfspace_offset(0.0).is_err());
    }

    #[test]
    fn eta_bound_values() {
        let f = (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((eta_bound(f).unwrap() - 1.0).abs() < 1e-14);
        assert!(eta_bound(0.0).is_err());
        assert!(eta_bound(-1.0).is_err());
        // tiny masses go through the log-argument route
        let e = eta_bound(1e-300).unwrap();
        assert!(e > gaussian_halfspace_offset(1e-300).unwrap());
        let h6 = gaussian_halfspace_offset(1e-6).unwrap();
        let e6 = eta_bound(1e-6).unwrap();
        assert!(e6 >= h6 && e6 - h6 < 0.1, "h={h6} eta={e6}");
    }

    #[test]
    fn mass_upper_limit_values() {
        // d = 2: 0.9^{1/2} · 2 / (2π)
        assert!((mass_upper_limit(dim(2)) - 0.9f64.sqrt() / PI).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for d in 2..=500 {
            let m = mass_upper_limit(dim(d));
            assert!(m < prev);
            prev = m;
            let df = d as f64;
            let ratio_bound = df / ((df - 1.0) * (2.0 * PI * df).sqrt());
            assert!(m <= ratio_bound * 0.9f64.powf(0.5 * (df - 1.0)) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume_log(2).unwrap() - PI.ln()).abs() < 1e-15);
        assert!((ball_volume_log(3).unwrap() - (4.0 * PI / 3.0).ln()).abs() < 1e-14);
        let v = ball_volume_log(100).unwrap();
        assert!((v - -91.241_272_659_303_023_36).abs() < 1e-12, "{v}");
        assert!((sphere_area_log(3).unwrap() - (4.0 * PI).ln()).abs() < 1e-14);
        assert!(ball_volume_log(0).is_err());
    }

    #[test]
    fn cap_construction_and_membership() {
        let cap = Cap::new(vec![0.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(cap.cos_threshold(), 0.0);
        assert!(cap.contains(&[0.0, 0.0, 1.0]));
        assert!(cap.contains(&[1.0, 0.0, 0.0]));
        assert!(!cap.contains(&[0.0, 0.0, -1.0]));
        let full = Cap::new(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(full.geodesic_radius(), PI);
        assert!(full.contains(&[-1.0, 0.0]));
        assert!(Cap::new(vec![1.0, 1.0], 0.1).is_err());
        assert!(Cap::new(vec![1.0], 0.1).is_err());
        assert!(Cap::new(vec![1.0, 0.0], 0.0).is_err());
        let big = Cap::new(vec![1.0, 0.0, 0.0], 0.8).unwrap();
        assert!(big.cos_threshold() < 0.0);
        let from_r = Cap::from_radius(vec![0.0, 1.0, 0.0], 1.0).unwrap();
        assert!((from_r.mass() - (1.0 - 1f64.cos()) / 2.0).abs() < 1e-14);
        let anti = big.antipode();
        assert_eq!(anti.center(), &[-1.0, -0.0, -0.0]);
        assert_eq!(anti.mass(), big.mass());
    }

    #[test]
    fn cone_geometry_basic() {
        let d = dim(20);
        assert!(ConeGeometry::new(d, mass_upper_limit(d)).is_err());
        let g = ConeGeometry::new(d, 1e-6).unwrap();
        assert!(g.offset <= g.eta);
        assert!((gauss_tail(g.offset) / 1e-6 - 1.0).abs() < 1e-12);
        let r = ConeGeometry::new(d, 0.999 * mass_upper_limit(d)).unwrap().radius_ratio();
        assert!(r < 0.9f64.sqrt());
    }

    proptest! {
        #[test]
        fn cap_mass_increasing(d in 2usize..300, t in 0.001f64..3.1, dt in 1e-3f64..0.04) {
            let a = cap_mass_from_radius(dim(d), t).unwrap();
            let b = cap_mass_from_radius(dim(d), (t + dt).min(PI)).unwrap();
            prop_assert!(b >= a);
            // above π/2 the increments of 1 - tiny fall below one ulp
            if t + dt <= FRAC_PI_2 && a > 0.0 {
                prop_assert!(b > a);
            }
        }

        #[test]
        fn eta_dominates_offset(lf in -200.0f64..-0.7) {
            let f = lf.exp();
            prop_assert!(eta_bound(f).unwrap() >= gaussian_halfspace_offset(f).unwrap());
        }
    }
}
