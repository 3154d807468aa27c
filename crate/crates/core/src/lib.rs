//! Viscosity min-max for surfaces in the round 3-sphere.
//!
//! Surfaces are triangle meshes with unit vertex coordinates in R⁴. The
//! relaxed energy `area + σ² ∫ (1 + |II|²)^p` is minimised by preconditioned
//! projected descent, maximised over sweep-outs, and the resulting critical
//! points are inspected with varifold-style diagnostics.

pub mod ambient;
pub mod cli;
pub mod dual;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod minmax;
pub mod reduce;
pub mod variation;
pub mod varifold;

pub use error::{Error, Result};
