//! Evolving surface finite elements for the Cahn-Hilliard equation.
//!
//! The order parameter `u` and chemical potential `w` are approximated by
//! piecewise-linear functions on a triangulated surface whose nodes move with
//! an analytic surface flow. Two backward-Euler type schemes are provided:
//! a fully implicit one and an implicit-explicit one that treats the concave
//! part of the double-well potential explicitly.
//!
//! Module map:
//! - [`surface`]: analytic level-set surfaces and their exact node motion
//! - [`mesh`]: triangulations, refinement hierarchies, prolongation
//! - [`assembly`], [`quadrature`]: P1 mass, stiffness and nonlinear terms
//! - [`sparse`], [`scheme`]: linear algebra, Newton, time stepping
//! - [`diagnostics`]: energy, norms, errors, convergence studies
//! - [`config`], [`output`], [`commands`]: run configuration files, CSV and
//!   VTK output, the command-line operations

pub mod assembly;
pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod output;
pub mod potential;
pub mod quadrature;
pub mod scheme;
pub mod sparse;
pub mod surface;
pub mod vec3;

pub use error::{Error, Result};
pub use mesh::{build_icosphere, build_torus_mesh, MeshHierarchy, SurfaceMesh};
pub use potential::Potential;
pub use scheme::{InitialData, PhaseState, SchemeConfig, SchemeKind};
pub use surface::LevelSetSurface;
pub use vec3::Vec3;
