//! P1 finite elements for the scattered field on a truncated disk with a
//! Fourier–Hankel Dirichlet-to-Neumann boundary condition.

pub mod assemble;
pub mod farfield;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod residual;
pub mod solve;
pub mod sparse;

use num_complex::Complex64;

pub use assemble::{assemble, default_truncation, required_truncation, DtnOperator, LinearSystem};
pub use farfield::{far_field, l2_distance, l2_norm, FarField};
pub use mesh::{generate_mesh, Mesh, MeshOptions};
pub use residual::{transmission_residual, TransmissionResidual};
pub use solve::{solve, SolveReport, Solver, RESIDUAL_TOLERANCE};

use crate::error::FemError;
use crate::incident::IncidentField;
use crate::media::MediumSpec;
use crate::Point;

/// Discretization parameters. `None` selects the defaults
/// `R_c = 1.6 × circumradius` about the bounding-box center and
/// `M = ceil(kR_c) + 12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemParams {
    pub h: f64,
    pub rc: Option<f64>,
    pub m: Option<usize>,
    pub n_theta: usize,
}

impl FemParams {
    pub fn new(h: f64) -> Self {
        Self { h, rc: None, m: None, n_theta: 256 }
    }
}

#[derive(Debug, Clone)]
pub struct ScatterSolution {
    pub mesh: Mesh,
    /// Nodal values of the scattered field `w`.
    pub w: Vec<Complex64>,
    pub far_field: FarField,
    pub solve: SolveReport,
    pub m: usize,
    pub k: f64,
}

/// Truncation radius and center used for `medium` under `params`.
pub fn truncation_circle(medium: &MediumSpec, params: &FemParams) -> (Point, f64) {
    let center = medium.domain.center();
    let rc = params.rc.unwrap_or(1.6 * medium.domain.circumradius());
    (center, rc)
}

/// Meshes, assembles, solves and extracts the far field.
pub fn solve_scattering(medium: &MediumSpec, v: &IncidentField, k: f64, params: &FemParams) -> Result<ScatterSolution, FemError> {
    let (center, rc) = truncation_circle(medium, params);
    let mesh = generate_mesh(center, rc, Some(&medium.domain), params.h, MeshOptions::default())?;
    solve_on_mesh(mesh, medium, v, k, params)
}

/// As [`solve_scattering`] on a prebuilt mesh.
pub fn solve_on_mesh(mesh: Mesh, medium: &MediumSpec, v: &IncidentField, k: f64, params: &FemParams) -> Result<ScatterSolution, FemError> {
    let m = params.m.unwrap_or_else(|| default_truncation(k, mesh.radius));
    let system = assemble(Some(medium), v, k, m, &mesh)?;
    let (w, report) = solve(&system)?;
    let ff = far_field(&mesh, &w, k, m, params.n_theta)?;
    Ok(ScatterSolution { mesh, w, far_field: ff, solve: report, m, k })
}
