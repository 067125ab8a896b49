//! Reproducible sampling of the Poisson point configurations that drive all
//! three models, plus the 45° rotation linking the `(x,t)` quadrant picture
//! with the `(z,s)` space-time picture.
//!
//! Sampling is deterministic given `(parameters, seed)`. The generator is
//! ChaCha8 with one independent keystream per component (bulk, sources,
//! sinks, auxiliary coins), so the three Poisson processes are mutually
//! independent substreams of a single seed. Replica seeds are derived with a
//! SplitMix64 step, which is injective in the replica index.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// A point of the closed quadrant in the `(x,t)` picture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub t: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, t: f64) -> Self {
        debug_assert!(x >= 0.0 && t >= 0.0);
        PlanarPoint { x, t }
    }

    /// Weak componentwise domination: both coordinates lower or equal.
    pub fn dominated_by(&self, other: &PlanarPoint) -> bool {
        self.x <= other.x && self.t <= other.t
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.t)
    }
}

/// Image of a quadrant point under the 45° rotation: `z` is the substrate
/// coordinate, `s` the time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedPoint {
    pub z: f64,
    pub s: f64,
}

/// One seeded realization of the three Poisson processes in a finite window:
/// bulk of intensity 1 strictly inside the quadrant, sources of intensity
/// `lambda` on the x-axis, sinks of intensity `rho` on the t-axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointConfig {
    pub bulk: Vec<PlanarPoint>,
    /// Abscissas of the source points `(x, 0)`.
    pub sources: Vec<f64>,
    /// Ordinates of the sink points `(0, t)`.
    pub sinks: Vec<f64>,
    pub lambda: f64,
    pub rho: f64,
    /// `(x_max, t_max)`; the window is closed at 0 and open at the far edge.
    pub window: (f64, f64),
    pub seed: u64,
}

/// SplitMix64 finalizer; a bijection on `u64`.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for replica `index` of an ensemble with the given base seed.
/// Injective in the index, so no two replicas share a keystream.
pub fn replica_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9e3779b97f4a7c15)))
}

/// Keystream identifiers inside one configuration.
#[derive(Clone, Copy)]
enum Stream {
    Bulk = 0,
    Sources = 1,
    Sinks = 2,
    Aux = 3,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Draws a coordinate in `(0, max)`, resampling values that collide with
/// `used` (almost surely absent, but chain comparisons assume distinct
/// coordinates) or fall exactly on the closed boundary.
fn fresh_coord(rng: &mut ChaCha8Rng, max: f64, used: &mut HashSet<u64>) -> f64 {
    loop {
        let v: f64 = rng.gen::<f64>() * max;
        if v <= 0.0 {
            continue;
        }
        if used.insert(v.to_bits()) {
            return v;
        }
    }
}

/// Samples one configuration. The three Poisson streams are independent
/// substreams of `seed`; identical inputs reproduce the identical
/// configuration bit-for-bit.
pub fn sample_config(lambda: f64, rho: f64, window: (f64, f64), seed: u64) -> Result<PointConfig> {
    if !(lambda >= 0.0) || !(rho >= 0.0) {
        return Err(Error::invalid("intensities must be nonnegative"));
    }
    let (x_max, t_max) = window;
    if !(x_max > 0.0) || !(t_max > 0.0) {
        return Err(Error::invalid("window components must be positive"));
    }

    // Distinctness is enforced per axis: abscissas are unique across
    // sources and bulk, ordinates across sinks and bulk.
    let mut used_x: HashSet<u64> = HashSet::new();
    let mut used_t: HashSet<u64> = HashSet::new();

    let mut src_rng = stream_rng(seed, Stream::Sources);
    let n_src = poisson_count(&mut src_rng, lambda * x_max);
    let mut sources: Vec<f64> = (0..n_src)
        .map(|_| fresh_coord(&mut src_rng, x_max, &mut used_x))
        .collect();
    sources.sort_by(f64::total_cmp);

    let mut snk_rng = stream_rng(seed, Stream::Sinks);
    let n_snk = poisson_count(&mut snk_rng, rho * t_max);
    let mut sinks: Vec<f64> = (0..n_snk)
        .map(|_| fresh_coord(&mut snk_rng, t_max, &mut used_t))
        .collect();
    sinks.sort_by(f64::total_cmp);

    let mut bulk_rng = stream_rng(seed, Stream::Bulk);
    let n_bulk = poisson_count(&mut bulk_rng, x_max * t_max);
    let bulk: Vec<PlanarPoint> = (0..n_bulk)
        .map(|_| {
            let x = fresh_coord(&mut bulk_rng, x_max, &mut used_x);
            let t = fresh_coord(&mut bulk_rng, t_max, &mut used_t);
            PlanarPoint { x, t }
        })
        .collect();

    Ok(PointConfig {
        bulk,
        sources,
        sinks,
        lambda,
        rho,
        window,
        seed,
    })
}

impl PointConfig {
    /// An auxiliary coin stream, independent of the point data, for
    /// measure-zero tie-breaks (e.g. a nucleation exactly on the substrate
    /// origin).
    pub fn aux_rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, Stream::Aux)
    }

    /// The transposed configuration: axes swapped, sources and sinks
    /// exchanged. Used for the dual particle dynamics.
    pub fn transpose(&self) -> PointConfig {
        PointConfig {
            bulk: self.bulk.iter().map(|p| PlanarPoint { x: p.t, t: p.x }).collect(),
            sources: self.sinks.clone(),
            sinks: self.sources.clone(),
            lambda: self.rho,
            rho: self.lambda,
            window: (self.window.1, self.window.0),
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PointConfig> {
        Ok(serde_json::from_str(text)?)
    }
}

/// 45° rotation taking the quadrant to the forward light cone `|z| <= s`.
/// The x-axis maps onto `{z = s}` and the t-axis onto `{z = -s}`.
pub fn rotate(p: PlanarPoint) -> RotatedPoint {
    RotatedPoint {
        z: (p.x - p.t) / SQRT_2,
        s: (p.x + p.t) / SQRT_2,
    }
}

/// Inverse of [`rotate`]; rejects points outside the light cone.
pub fn unrotate(q: RotatedPoint) -> Result<PlanarPoint> {
    if q.z.abs() > q.s {
        return Err(Error::invalid(format!(
            "({}, {}) lies outside the cone |z| <= s",
            q.z, q.s
        )));
    }
    Ok(PlanarPoint {
        x: (q.s + q.z) / SQRT_2,
        t: (q.s - q.z) / SQRT_2,
    })
}
