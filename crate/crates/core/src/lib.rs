//! Simulation laboratory for three equivalent planar growth models driven by
//! the same Poisson point data: last-passage percolation on the quadrant,
//! the Hammersley interacting particle process with boundary sources and
//! sinks, and polynuclear growth (PNG) with external sources.
//!
//! The crate is organised around the shared point field:
//!
//! * [`point`] — reproducible sampling of the driving Poisson configurations
//!   and the 45° rotation between the `(x,t)` and `(z,s)` pictures;
//! * [`lpp`] — longest weakly-increasing chains, level decompositions,
//!   beta-points/paths, geodesics and related geometry;
//! * [`hammersley`] — event-driven particle dynamics with second-class
//!   particles (normal and dual);
//! * [`png`] — event-driven height-profile growth and the two-type
//!   competition interface;
//! * [`hydro`] — closed-form macroscopic laws (shape function, growth
//!   velocity, Burgers profile, limit CDFs);
//! * [`harness`] — ensemble orchestration, estimators and persistence;
//! * [`export`] — CSV and SVG emitters for configurations, runs and tables.

pub mod error;
pub mod export;
pub mod hammersley;
pub mod harness;
pub mod hydro;
pub mod lpp;
pub mod png;
pub mod point;

pub use error::Error;
pub use point::{PlanarPoint, PointConfig, RotatedPoint};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
