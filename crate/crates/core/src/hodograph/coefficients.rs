//! Coefficients of the divergence-form equation `Σ_j ∂_{y_j} a_j + a₀ = 0`
//! satisfied by `z`, and of the boundary condition `b = 0` on `Σ`.

use rayon::prelude::*;
use serde::Serialize;

use super::problem::LocalProblem;
use super::zgrid::{solve_z, GridSpec, ZGrid, ZNode};
use crate::error::HodographError;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    /// `½(∇̃z)⊤A∇̃z`.
    pub a1: f64,
    /// `(A∇̃z)₂`.
    pub a2: f64,
    /// `½∂₁z (∇̃z)⊤(∂_{x₁}A)∇̃z + k²n y₁ + ∇·(A−I)∇v + k²(n−1)v`.
    pub a0: f64,
}

/// Evaluates `a₀, a₁, a₂` at a node, composing `A`, `n`, `v` with `H⁻¹`.
pub fn transform_coefficients(pb: &LocalProblem, node: &ZNode) -> CoefficientSet {
    let g = node.tilde_grad();
    let aj = pb.a.jet(node.x);
    let ag = aj.value * g;
    let n = pb.n.value(node.x);
    let vj = pb.v.jet(node.x);
    let k2 = pb.k * pb.k;
    CoefficientSet {
        a1: 0.5 * g.dot(&ag),
        a2: ag.y,
        a0: 0.5 * node.dz.x * g.dot(&(aj.partials[0] * g)) + k2 * n * node.y.x + aj.div_flux(&vj, 1.0) + k2 * (n - 1.0) * vj.value,
    }
}

/// `(∇·A∇w + k²nw + ∇·(A−I)∇v + k²(n−1)v)(x)` in closed form.
pub fn pde_residual_x(pb: &LocalProblem, x: Point) -> f64 {
    let aj = pb.a.jet(x);
    let wj = pb.w.jet(x);
    let vj = pb.v.jet(x);
    let n = pb.n.value(x);
    let k2 = pb.k * pb.k;
    aj.div_flux(&wj, 0.0) + k2 * n * wj.value + aj.div_flux(&vj, 1.0) + k2 * (n - 1.0) * vj.value
}

/// `b = (∇̃z)⊤A∇̃z + (∇̃z)⊤(A−I)∇_x v` at a `Σ` node, for a given `∇_x v`.
pub fn boundary_residual(pb: &LocalProblem, node: &ZNode, grad_v: Point) -> f64 {
    let g = node.tilde_grad();
    let a = pb.a.jet(node.x).value;
    g.dot(&(a * g)) + g.dot(&((a - crate::Mat2::identity()) * grad_v))
}

/// `∇v₀ + s(A−I)∇w` with `s` chosen so the boundary condition `b = 0`
/// holds exactly. `None` when `(A−I)∇w = 0`.
pub fn manufactured_gradient(a: &crate::Mat2, grad_w: Point, grad_v0: Point) -> Option<Point> {
    let c = (a - crate::Mat2::identity()) * grad_w;
    let c2 = c.norm_squared();
    if c2 == 0.0 {
        return None;
    }
    let s = -(grad_w.dot(&(a * grad_w)) + c.dot(&grad_v0)) / c2;
    Some(grad_v0 + s * c)
}

/// Errors of the divergence identity on one grid level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityLevel {
    pub n: usize,
    pub step: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityStudy {
    pub levels: Vec<IdentityLevel>,
    /// Least-squares slope of `log error` against `log step`.
    pub order: f64,
}

/// Compares centered differences of `Σ_j ∂_{y_j} a_j + a₀` (grid step
/// `y₁max/n`, `2y′max/n`) with [`pde_residual_x`] at the interior nodes of
/// the coarsest grid, for each `n` in `levels` (multiples of the first).
pub fn divergence_identity(pb: &LocalProblem, levels: &[usize]) -> Result<IdentityStudy, HodographError> {
    let coarse = *levels.first().ok_or_else(|| HodographError::InvalidParameter("no grid levels".into()))?;
    let base = super::zgrid::build_z(pb.w.as_ref(), pb.radius(), GridSpec::square(coarse))?;
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let (d1, d2) = (base.y1max / n as f64, 2.0 * base.y2max / n as f64);
        let errs: Vec<f64> = interior(&base)
            .par_iter()
            .map(|node| -> Result<f64, HodographError> {
                let c =
                    |y: Point| -> Result<CoefficientSet, HodographError> { Ok(transform_coefficients(pb, &solve_z(pb.w.as_ref(), y, pb.radius())?)) };
                let e1 = Point::new(d1, 0.0);
                let e2 = Point::new(0.0, d2);
                let div = (c(node.y + e1)?.a1 - c(node.y - e1)?.a1) / (2.0 * d1) + (c(node.y + e2)?.a2 - c(node.y - e2)?.a2) / (2.0 * d2);
                let lhs = div + transform_coefficients(pb, node).a0;
                Ok((lhs - pde_residual_x(pb, node.x)).abs())
            })
            .collect::<Result<_, _>>()?;
        out.push(IdentityLevel { n, step: d1, max_error: errs.iter().copied().fold(0.0, f64::max) });
    }
    let pts: Vec<(f64, f64)> = out.iter().map(|l| (l.step.ln(), l.max_error.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    Ok(IdentityStudy { levels: out, order: num / den })
}

fn interior(g: &ZGrid) -> Vec<ZNode> {
    g.nodes.iter().filter(|n| n.index.0 > 0 && n.index.0 < g.spec.n1 && n.index.1 > 0 && n.index.1 < g.spec.n2).copied().collect()
}
