//! Cauchy-data mismatch of the total field on the interface.

use num_complex::Complex64;

use super::assemble::p1_gradients;
use super::mesh::Mesh;
use crate::error::FemError;
use crate::incident::IncidentField;
use crate::media::MediumSpec;
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionResidual {
    /// `max |u − v|` over interface edge midpoints.
    pub max_value: f64,
    /// `max |ν⊤A∇u − ∂_ν v|`, with `∇u` from the triangle inside `Ω`.
    pub max_flux: f64,
    pub samples: Vec<(Point, Complex64, Complex64)>,
}

/// Evaluates `u − v` and `ν⊤A∇u − ∂_ν v` for `u = v + w` at the midpoints of
/// the interface edges.
pub fn transmission_residual(mesh: &Mesh, w: &[Complex64], v: &IncidentField, medium: &MediumSpec) -> Result<TransmissionResidual, FemError> {
    let inner = mesh.interface_inner_triangles();
    let mut samples = Vec::with_capacity(inner.len());
    let (mut max_value, mut max_flux) = (0.0f64, 0.0f64);
    for (&[a, b], tri) in mesh.interface_edges.iter().zip(inner) {
        let Some(t) = tri else { continue };
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let mid = 0.5 * (pa + pb);
        let d = pb - pa;
        let nu = Point::new(d.y, -d.x) / d.norm();
        let du = 0.5 * (w[a] + w[b]);
        let p = mesh.corners(t);
        let (_, g) = p1_gradients(&p);
        let nodes = mesh.triangles[t];
        let mut gw = [Complex64::default(); 2];
        for i in 0..3 {
            gw[0] += w[nodes[i]] * g[i].x;
            gw[1] += w[nodes[i]] * g[i].y;
        }
        let (_, gv) = v.eval(mid)?;
        let (amat, _) = medium.interior(mid)?;
        let an = amat.transpose() * nu;
        let gu = [gv[0] + gw[0], gv[1] + gw[1]];
        let flux = an.x * gu[0] + an.y * gu[1] - (nu.x * gv[0] + nu.y * gv[1]);
        max_value = max_value.max(du.norm());
        max_flux = max_flux.max(flux.norm());
        samples.push((mid, du, flux));
    }
    Ok(TransmissionResidual { max_value, max_flux, samples })
}
