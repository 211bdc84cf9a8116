//! Two-dimensional anisotropic Helmholtz scattering laboratory.
//!
//! The medium `(A, n, Ω)` scatters an incident field `v` solving
//! `Δv + k²v = 0`; the total field `u = v + w` solves `∇·A∇u + k²nu = 0`
//! with `A = I`, `n = 1` outside `Ω` and an outgoing scattered part `w`.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod hodograph;
pub mod incident;
pub mod media;
pub mod radial;
pub mod specialfun;

pub use error::{FemError, HodographError, IncidentError, MediaError, RadialError, SpecialFunctionError};

/// Points in the plane.
pub type Point = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub use num_complex::Complex64;
