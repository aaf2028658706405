//! Numerical laboratory for partial coverings of the unit sphere `S^{d-1}` by
//! geodesic caps.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`]: log-gamma, incomplete beta/gamma, Lambert W, Gaussian tail.
//! * [`quadrature`]: adaptive Gauss–Kronrod and Simpson integrators.
//! * [`cap`]: conversions between cap mass, geodesic radius, cosine threshold
//!   and Gaussian half-space offset, plus ball/sphere volume constants.
//! * [`sampling`]: reproducible chunked sampling on the sphere and cap
//!   configurations.
//! * [`coverage`]: Monte Carlo and exact estimates of the covered measure.
//! * [`bounds`]: closed-form upper and lower bounds for the best partial
//!   covering by congruent caps.
//! * [`verify`]: Monte Carlo and quadrature checks of the Gaussian-geometry
//!   estimates the bounds rest on.
//! * [`optimizer`]: hill climbing over cap centers with common random numbers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod cap;
pub mod coverage;
mod error;
pub mod optimizer;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod verify;

pub use cap::{Cap, ConeGeometry, Dim};
pub use coverage::CoverageEstimate;
pub use error::{Error, Result};
pub use sampling::{Configuration, RngSpec, SpherePoints, ZoneSpec};
pub use verify::VerificationReport;
