//! Hodograph transform `H: x ↦ (w(x), x′)` flattening the boundary near a
//! point `P`, the divergence-form equation for the inverse graph function
//! `z`, and certificates for its linearization.

pub mod certify;
pub mod coefficients;
pub mod fields;
pub mod frame;
pub mod linearize;
pub mod problem;
pub mod random;
pub mod zgrid;

pub use certify::{certify, Certificate, CertifyOptions, SigmaData};
pub use coefficients::{boundary_residual, divergence_identity, manufactured_gradient, transform_coefficients, CoefficientSet, IdentityStudy};
pub use fields::{FnMatrix, FnScalar, MatrixField, MatrixJet, MlsField, ScalarField, ScalarJet};
pub use frame::{align_frame, HodographFrame};
pub use linearize::{linearize, linearize_with, LinearizedSystem};
pub use problem::LocalProblem;
pub use random::{degenerate_problem, random_triple, RandomTriple};
pub use zgrid::{build_z, GridSpec, ZGrid, ZNode};
