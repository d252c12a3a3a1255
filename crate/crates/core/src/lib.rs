//! Half-space cavity elastostatics: forward boundary-element solver and
//! parametric shape inversion.
//!
//! The forward problem is the Lamé system in the lower half-space with a
//! traction-free surface plane and a uniform pressure load on the boundary of
//! an embedded cavity. Displacements are represented through the half-space
//! Neumann function (Kelvin matrix plus Mindlin-type image corrections), the
//! unknown boundary trace is solved from a collocation boundary integral
//! equation, and the inverse problem recovers a low-dimensional cavity
//! parametrization from surface displacement data.
//!
//! Module map:
//! - [`elasticity`]: Lamé moduli, the isotropic constitutive law, auxiliary
//!   linear field.
//! - [`greens`]: Kelvin fundamental solution, half-space image terms, their
//!   gradients and a verification suite.
//! - [`quadrature`]: triangle quadrature rules, adaptive subdivision, Duffy
//!   transform for the weakly singular self term.
//! - [`mesh`]: triangulated cavity boundaries, geometric validators, the
//!   Hausdorff metric, ASCII mesh I/O.
//! - [`bem`]: assembly and solution of the boundary integral equation,
//!   displacement evaluation, weighted-norm diagnostics.
//! - [`inverse`]: surface measurement sets, misfit, Levenberg-Marquardt
//!   inversion and the noise-stability sweep.

pub mod bem;
pub mod elasticity;
pub mod greens;
pub mod inverse;
pub mod mesh;
pub mod quadrature;

mod linalg;

pub use elasticity::{ElasticModuli, Pressure};
pub use mesh::{CavityParams, CavityPriors, TriSurfaceMesh};

