//! Numerical laboratory for Berezin-Toeplitz quantization on weighted
//! Bergman spaces of the unit ball in C^n (n = 1, 2).
//!
//! Layering, bottom-up: [`special`] and [`linalg`] are plain numerics,
//! [`bergman`] holds the ball geometry, [`quadrature`] integrates against
//! the weighted measure, [`symbols`] and [`operators`] build truncated
//! Toeplitz objects, [`oscillation`] computes Berezin transforms and
//! oscillation seminorms, and [`experiments`] runs the lambda sweeps.

pub mod bergman;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod operators;
pub mod oscillation;
pub mod quadrature;
pub mod special;
pub mod symbols;

pub use num_complex::Complex64 as C64;

pub use bergman::{BallGeometry, Point, Weight};
pub use error::{Error, Result};
pub use symbols::{Symbol, Tags};
