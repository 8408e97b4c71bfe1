//! Explicit distortion words for circle diffeomorphisms.
//!
//! The crate builds five generators of a subgroup of `Diff^∞(ℝ/ℤ)`, factors
//! near-identity maps into commutators of maps with prescribed supports, and
//! writes each such map as an explicit word in the generators whose length is
//! tracked exactly.

pub mod acceptance;
pub mod circle;
pub mod config;
pub mod distortion;
pub mod error;
pub mod flows;
pub mod generators;
pub mod io;
pub mod perfect;
pub mod rotation;
pub mod smooth;
pub mod solve;
pub mod word;

pub use circle::{CirclePoint, Diffeo, Interval, MetricConfig};
pub use config::Config;
pub use error::{Error, Result};
