//! Spectral stability of ZND detonations in Majda's scalar model.
//!
//! The crate computes the Evans–Lopatinski determinant by a family of
//! shooting schemes, counts unstable roots with adaptive winding-number
//! contours, and benchmarks the schemes against each other.

pub mod bench;
pub mod cli;
pub mod evans;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod stability;

pub use evans::{comparable_d, evaluate_d, reduced_d, BoundaryData, Coordinates, DeterminantSample, EvansError, MethodId};
pub use integrator::{IntegrationStats, Tolerance};
pub use model::{IgnitionKind, ModelParams, Profile};
