//! Dimension-theoretic invariants of affine iterated function systems.
//!
//! The crate computes the singular value function, finite-level
//! subadditive pressure and its envelope, affinity-dimension brackets,
//! projected-exponent bounds for linear images of self-affine sets, and
//! structural certificates (irreducibility of the exterior powers,
//! proximality, strong separation), plus attractor sampling, box-counting
//! slopes, and density renderings.
//!
//! Everything numerical is generic over the scalar type through
//! [`Real`] (`f32` or `f64`); the aliases below fix `f64`, which is what
//! the command-line driver uses.
//!
//! Conventions kept throughout:
//! - level quantities are reported together with their *envelope*
//!   (minimum over computed levels), which by subadditivity is a certified
//!   upper bound on the corresponding limit;
//! - randomised operations take an explicit seed and are bitwise
//!   reproducible for a fixed seed and shard count;
//! - certificates carry witnesses that can be re-checked standalone.

pub mod attractor;
pub mod error;
pub mod gallery;
pub mod linalg;
pub mod pressure;
pub mod scalar;
pub mod structure;
pub mod wordspace;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` working types, the default precision of the toolkit.
pub type Matrix64 = linalg::Matrix<f64>;
pub type MatrixTuple64 = pressure::MatrixTuple<f64>;
pub type AffineIfs64 = structure::AffineIfs<f64>;
pub type PointCloud64 = attractor::PointCloud<f64>;
pub type DimensionBracket64 = pressure::DimensionBracket<f64>;
pub type PressureEstimate64 = pressure::PressureEstimate<f64>;
pub type CertificateReport64 = structure::CertificateReport<f64>;

/// `f32` aliases for the core value types.
pub type Matrix32 = linalg::Matrix<f32>;
pub type MatrixTuple32 = pressure::MatrixTuple<f32>;
