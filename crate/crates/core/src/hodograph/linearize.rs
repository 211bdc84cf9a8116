//! First variation of the transformed problem: principal matrix `Ã` in `V⁺`
//! and oblique boundary vector `(b₁, b₂)` on `Σ`.

use super::problem::LocalProblem;
use super::zgrid::ZNode;
use crate::{Mat2, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSystem {
    /// `Ã = −(1/∂₁z) [[∇̃ᵀA∇̃, (a₁₂ − a₂₂∂₂z)/∂₁z], [·, a₂₂]]`.
    pub a_tilde: Mat2,
    /// `−(1/∂₁z)(∇̃z)⊤A∇̃z`, the form valid where `b = 0`.
    pub b1: f64,
    /// `−(1/∂₁z)(2(∇̃z)⊤A∇̃z + (∇̃z)⊤(A−I)∇v)`.
    pub b1_raw: f64,
    /// `−(1/∂₁z)(2A∇̃z + (A−I)∇v)₂`.
    pub b2: f64,
    /// Boundary residual `b` with the same `∇v`.
    pub b: f64,
}

/// Linearization at `node`, using `grad_v` for `∇_x v`.
pub fn linearize_with(pb: &LocalProblem, node: &ZNode, grad_v: Point) -> LinearizedSystem {
    let (p, q) = (node.dz.x, node.dz.y);
    let g = node.tilde_grad();
    let a = pb.a.jet(node.x).value;
    let quad = g.dot(&(a * g));
    let off = (a[(0, 1)] - a[(1, 1)] * q) / p;
    let a_tilde = Mat2::new(quad, off, off, a[(1, 1)]) * (-1.0 / p);
    let c = (a - Mat2::identity()) * grad_v;
    LinearizedSystem { a_tilde, b1: -quad / p, b1_raw: -(2.0 * quad + g.dot(&c)) / p, b2: -(2.0 * (a * g).y + c.y) / p, b: quad + g.dot(&c) }
}

/// Linearization with `∇v` taken from the problem's incident field.
pub fn linearize(pb: &LocalProblem, node: &ZNode) -> LinearizedSystem {
    linearize_with(pb, node, pb.v.jet(node.x).gradient)
}

/// Relative defect of `−(∂₁z)ξ⊤Ãξ = ξ̃_z⊤Aξ̃_z` with
/// `ξ̃_z = (0, ξ₂) + ξ₁∇̃z`.
pub fn quadratic_form_defect(a: &Mat2, node: &ZNode, a_tilde: &Mat2, xi: Point) -> f64 {
    let lhs = -node.dz.x * xi.dot(&(a_tilde * xi));
    let xt = Point::new(0.0, xi.y) + xi.x * node.tilde_grad();
    let rhs = xt.dot(&(a * xt));
    (lhs - rhs).abs() / rhs.abs().max(1.0)
}
