//! Shape optimization of mutual inductances among closed wire coils.
//!
//! Coils are periodic B-spline curves; their control points are the design
//! variables. The library computes Neumann-formula mutual inductances, their
//! analytic shape sensitivities, coil-length constraints with gradients, and
//! drives a constrained SQP solver to steer selected pairwise inductances to
//! target values.

pub mod bspline;
pub mod constraints;
pub mod curve;
pub mod em;
pub mod error;
pub mod objective;
pub mod oracle;
pub mod quadrature;
pub mod run;
pub mod scene;
pub mod solver;

pub use curve::{circle_coil, torus_coil, CoilCurve, Vec3};
pub use error::{Error, Result};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use scene::Scene;
