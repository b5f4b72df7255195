//! Hybrid High-Order (HHO) discretization of the steady incompressible
//! Navier-Stokes equations on general two-dimensional polygonal meshes.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: polygonal meshes with global faces, normals and size data;
//! - [`fespace`]: orthonormal polynomial bases, quadrature, L2 projectors,
//!   hybrid velocity vectors and the interpolator;
//! - [`local_ops`]: element-local reconstructions (gradient, potential,
//!   divergence), stabilization, viscous/coupling matrices and the
//!   skew-symmetric convective trilinear form;
//! - [`assembly`]: DOF numbering, Newton linearization and static
//!   condensation onto face unknowns plus one pressure value per element;
//! - [`solver`]: Stokes and Navier-Stokes drivers;
//! - [`bench`]: exact solutions, error norms and convergence studies.

pub mod assembly;
pub mod bench;
pub mod error;
pub mod fespace;
pub mod local_ops;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Point = [f64; 2];
