//! Reproducible sampling on `S^{d-1}` and cap configurations.
//!
//! Every random quantity is generated in fixed-size chunks. Chunk `i` draws
//! from its own ChaCha8 stream seeded with `mix(master_seed, i)`, so the
//! output depends only on `(master_seed, chunk_size)` and never on how rayon
//! schedules the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cap::{dot, mass_upper_limit, Cap, Dim};
use crate::error::{domain, Error, Result};

pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;

/// splitmix64 finalizer applied to `seed + (index + 1) * golden`.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RngSpec {
    pub master_seed: u64,
    pub chunk_size: usize,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        RngSpec {
            master_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(self, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(domain("RngSpec::with_chunk_size", "chunk size must be positive"));
        }
        Ok(RngSpec { chunk_size, ..self })
    }

    /// Generator for chunk `index`.
    pub fn chunk_rng(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(self.master_seed, index))
    }

    /// An independent spec for sub-experiment `index`; the chunk size carries
    /// over. Sub-streams of distinct indices never share chunk seeds except by
    /// 64-bit collision.
    pub fn substream(&self, index: u64) -> RngSpec {
        RngSpec {
            master_seed: mix(self.master_seed ^ 0xD1B5_4A32_D192_ED03, index),
            chunk_size: self.chunk_size,
        }
    }

    fn chunk_count(&self, count: usize) -> usize {
        count.div_ceil(self.chunk_size)
    }

    /// Runs `work(rng, start, len)` for each chunk of `0..count` in parallel
    /// and returns the results in chunk order.
    pub fn map_chunks<T, F>(&self, count: usize, work: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize, usize) -> T + Sync,
    {
        let cs = self.chunk_size;
        (0..self.chunk_count(count))
            .into_par_iter()
            .map(|k| {
                let start = k * cs;
                let len = cs.min(count - start);
                let mut rng = self.chunk_rng(k as u64);
                work(&mut rng, start, len)
            })
            .collect()
    }
}

impl Default for RngSpec {
    fn default() -> Self {
        RngSpec::new(0)
    }
}

/// Fills `out` with independent standard normal draws.
pub fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Writes one uniform point of `S^{d-1}` into `out` (`d = out.len()`).
pub fn fill_unit<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        fill_gaussian(rng, out);
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Points of `S^{d-1}` stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoints {
    d: Dim,
    coords: Vec<f64>,
}

impl SpherePoints {
    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d.get()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.d.get();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.d.get())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// `count` i.i.d. uniform points of `S^{d-1}`, each a normalized Gaussian
/// vector.
pub fn sample_uniform_sphere(d: Dim, rng: RngSpec, count: usize) -> Result<SpherePoints> {
    if count == 0 {
        return Err(domain("sample_uniform_sphere", "count must be positive"));
    }
    let k = d.get();
    let chunks = rng.map_chunks(count, |r, _, len| {
        let mut buf = vec![0.0; len * k];
        for p in buf.chunks_exact_mut(k) {
            fill_unit(r, p);
        }
        buf
    });
    Ok(SpherePoints {
        d,
        coords: chunks.concat(),
    })
}

/// Caps on a common sphere, optionally arranged in antipodal pairs
/// `(x, -x)` occupying consecutive slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationDoc", into = "ConfigurationDoc")]
pub struct Configuration {
    d: Dim,
    caps: Vec<Cap>,
    antipodal: bool,
    alpha: Option<f64>,
}

const PAIR_TOL: f64 = 1e-12;

impl Configuration {
    pub fn new(d: Dim, caps: Vec<Cap>, antipodal: bool) -> Result<Self> {
        let cfg = Configuration {
            d,
            caps,
            antipodal,
            alpha: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    fn validate(&self) -> Result<()> {
        for (i, c) in self.caps.iter().enumerate() {
            if c.dim() != self.d {
                return Err(Error::InvalidConfiguration(format!(
                    "cap {i} lives in dimension {}, configuration in {}",
                    c.dim(),
                    self.d
                )));
            }
        }
        if self.antipodal {
            if !self.caps.len().is_multiple_of(2) {
                return Err(Error::InvalidConfiguration(
                    "antipodal configuration needs an even number of caps".into(),
                ));
            }
            for (k, pair) in self.caps.chunks_exact(2).enumerate() {
                let mirrored = pair[0]
                    .center()
                    .iter()
                    .zip(pair[1].center())
                    .all(|(a, b)| (a + b).abs() <= PAIR_TOL);
                if !mirrored || pair[0].mass() != pair[1].mass() {
                    return Err(Error::InvalidConfiguration(format!(
                        "caps {} and {} are not an antipodal pair of equal mass",
                        2 * k,
                        2 * k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn is_antipodal(&self) -> bool {
        self.antipodal
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn total_mass(&self) -> f64 {
        self.caps.iter().map(Cap::mass).sum()
    }

    /// Moves cap `i` (and its partner, when antipodal) to `center`.
    pub(crate) fn move_cap(&mut self, i: usize, center: Vec<f64>) {
        if self.antipodal {
            let first = i - i % 2;
            let mirrored: Vec<f64> = center.iter().map(|c| -c).collect();
            let (a, b) = if i.is_multiple_of(2) {
                (center, mirrored)
            } else {
                (mirrored, center)
            };
            self.caps[first] = self.caps[first].with_center(a);
            self.caps[first + 1] = self.caps[first + 1].with_center(b);
        } else {
            self.caps[i] = self.caps[i].with_center(center);
        }
    }

    /// Flat layout for membership scans.
    pub fn packed(&self) -> PackedCaps {
        let mut centers = Vec::with_capacity(self.caps.len() * self.d.get());
        let mut thresholds = Vec::with_capacity(self.caps.len());
        for c in &self.caps {
            centers.extend_from_slice(c.center());
            thresholds.push(c.cos_threshold());
        }
        PackedCaps {
            d: self.d.get(),
            centers,
            thresholds,
            has_full: self.caps.iter().any(Cap::is_full),
        }
    }
}

/// Cap centers and cosine thresholds in contiguous buffers.
#[derive(Debug, Clone)]
pub struct PackedCaps {
    d: usize,
    centers: Vec<f64>,
    thresholds: Vec<f64>,
    has_full: bool,
}

impl PackedCaps {
    #[inline]
    pub fn covers(&self, p: &[f64]) -> bool {
        if self.has_full {
            return true;
        }
        self.centers
            .chunks_exact(self.d)
            .zip(&self.thresholds)
            .any(|(c, &t)| dot(c, p) >= t)
    }
}

#[derive(Serialize, Deserialize)]
struct CapDoc {
    center: Vec<f64>,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationDoc {
    d: usize,
    alpha: Option<f64>,
    antipodal: bool,
    caps: Vec<CapDoc>,
}

impl TryFrom<ConfigurationDoc> for Configuration {
    type Error = Error;
    fn try_from(doc: ConfigurationDoc) -> Result<Self> {
        let d = Dim::new(doc.d)?;
        let caps = doc
            .caps
            .into_iter()
            .map(|c| Cap::new(c.center, c.mass))
            .collect::<Result<Vec<_>>>()?;
        let cfg = Configuration::new(d, caps, doc.antipodal)?;
        Ok(Configuration {
            alpha: doc.alpha,
            ..cfg
        })
    }
}

impl From<Configuration> for ConfigurationDoc {
    fn from(cfg: Configuration) -> Self {
        ConfigurationDoc {
            d: cfg.d.get(),
            alpha: cfg.alpha,
            antipodal: cfg.antipodal,
            caps: cfg
                .caps
                .into_iter()
                .map(|c| CapDoc {
                    mass: c.mass(),
                    center: c.center().to_vec(),
                })
                .collect(),
        }
    }
}

/// `N` caps of mass `α/N` around i.i.d. uniform centers.
pub fn random_configuration(d: Dim, n: usize, alpha: f64, rng: RngSpec) -> Result<Configuration> {
    if n == 0 {
        return Err(domain("random_configuration", "need N >= 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain("random_configuration", format!("need 0 < alpha <= 1, got {alpha}")));
    }
    let mass = alpha / n as f64;
    let centers = sample_uniform_sphere(d, rng, n)?;
    let template = Cap::new(centers.point(0).to_vec(), mass)?;
    let caps = centers.iter().map(|c| template.with_center(c.to_vec())).collect();
    Ok(Configuration {
        d,
        caps,
        antipodal: false,
        alpha: Some(alpha),
    })
}

/// Pairs `(x_i, -x_i)` of mass `f(i)` each. Every `f(i)` must lie in
/// `(0, mass_upper_limit(d))`. The recorded `alpha` is `2 Σ f(i)`.
pub fn antipodal_configuration(centers: &[Vec<f64>], masses: &[f64]) -> Result<Configuration> {
    if centers.is_empty() || centers.len() != masses.len() {
        return Err(domain(
            "antipodal_configuration",
            "need one mass per center and at least one pair",
        ));
    }
    let d = Dim::new(centers[0].len())?;
    let limit = mass_upper_limit(d);
    let mut caps = Vec::with_capacity(2 * centers.len());
    for (x, &f) in centers.iter().zip(masses) {
        if !(f > 0.0 && f < limit) {
            return Err(domain(
                "antipodal_configuration",
                format!("pair mass {f} outside (0, {limit:e})"),
            ));
        }
        let cap = Cap::new(x.clone(), f)?;
        caps.push(cap.antipode());
        caps.insert(caps.len() - 1, cap);
    }
    let alpha = 2.0 * masses.iter().sum::<f64>();
    Ok(Configuration::new(d, caps, true)?.with_alpha(alpha))
}

/// The equatorial zone `{x : |x_d| <= N^{-1/(d-1)}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ZoneSpec {
    pub d: Dim,
    pub n: usize,
    pub half_width_angle: f64,
    half_width_sine: f64,
}

impl ZoneSpec {
    pub fn new(d: Dim, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("ZoneSpec::new", "need N >= 1"));
        }
        let s = (n as f64).powf(-1.0 / (d.as_f64() - 1.0));
        Ok(ZoneSpec {
            d,
            n,
            half_width_angle: s.asin(),
            half_width_sine: s,
        })
    }

    pub fn half_width_sine(&self) -> f64 {
        self.half_width_sine
    }
}

pub fn in_zone(x: &[f64], z: &ZoneSpec) -> bool {
    debug_assert_eq!(x.len(), z.d.get());
    x[x.len() - 1].abs() <= z.half_width_sine
}
