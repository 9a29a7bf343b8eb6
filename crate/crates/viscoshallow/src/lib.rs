//! Discontinuous Galerkin solver for one-dimensional shallow-water flow of a
//! Bingham viscoplastic fluid.
//!
//! The momentum equation carries a depth-averaged Bingham stress whose plastic
//! part is regularized so the coupled system can be advanced with backward
//! Euler and a Newton-Raphson solve per step. The crate provides the mesh and
//! normalized Legendre bases, the regularized constitutive law, HLL/central
//! numerical fluxes, the element residual and analytic tangent assembly, the
//! implicit time loop with an optional continuation ramp of the
//! regularization slope, and the benchmark problems with their error norms.

pub mod assembly;
pub mod basis;
pub mod benchmarks;
pub mod constitutive;
pub mod error;
pub mod field;
pub mod flux;
pub mod linalg;
pub mod mesh;
pub mod newton;

pub use error::{Result, SolverError};
