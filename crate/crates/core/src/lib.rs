//! Isometry-invariant Finsler and Hermitean metrics on `F^n`.
//!
//! A metric that commutes with every unitary map is determined by a handful
//! of scalar profile functions. This crate builds metrics from those
//! profiles, recovers the profiles from black-box metrics, checks
//! definiteness, the Kaehler condition and homothety invariance, probes
//! which linear maps can be symmetries, and measures curve lengths and
//! geodesic distances (including the Fubini-Study metric on `F^n \ {0}`).

pub mod decomposition;
pub mod domain;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod invariance;
pub mod linalg;
pub mod metric;
pub mod profile;

pub use domain::RadiusDomain;
pub use error::{Error, Result};
pub use linalg::{Field, LinearMap, Vector};
pub use metric::{MetricKind, MetricSpec};
pub use num_complex::Complex64;
