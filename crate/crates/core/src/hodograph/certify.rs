//! Ellipticity and obliqueness certificates for the linearized transformed
//! problem, with measured constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::coefficients::manufactured_gradient;
use super::frame::HodographFrame;
use super::linearize::{linearize_with, quadratic_form_defect};
use super::problem::LocalProblem;
use super::zgrid::{build_z, GridSpec, ZNode};
use crate::error::HodographError;
use crate::media::sym_eigenvalues;
use crate::Point;

/// Source of `∇_x v` on `Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SigmaData {
    /// The problem's own `v`.
    Field,
    /// `∇v` corrected pointwise so that `b = 0` holds exactly.
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub grid: GridSpec,
    /// Random directions `ξ` tested at every node.
    pub directions: usize,
    pub seed: u64,
    pub sigma: SigmaData,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { grid: GridSpec::square(16), directions: 1000, seed: 0, sigma: SigmaData::Field }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridReport {
    pub n1: usize,
    pub n2: usize,
    pub y1max: f64,
    pub y2max: f64,
}

/// Constants measured over the grid nodes; `c₃` is only reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasuredConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3_min: f64,
    pub c3_max: f64,
    pub c4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObliqueMargin {
    /// `c₀⁻¹c₂⁻³`.
    pub bound: f64,
    pub min_neg_b1: f64,
    /// `min(−b₁) − bound`.
    pub margin: f64,
    pub worst_node: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub roundtrip: f64,
    pub jacobian: f64,
    pub pushforward: f64,
    pub quadratic_form: f64,
    /// `max |b|` on `Σ`.
    pub boundary: f64,
    /// `max |b₁ − b₁,raw|` on `Σ`.
    pub b1_forms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeFailure {
    pub y: [f64; 2],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub frame: HodographFrame,
    pub grid: GridReport,
    pub constants: MeasuredConstants,
    /// Range of `−ξ⊤Ãξ/|ξ|²` over nodes and directions.
    pub ellipticity: Range,
    pub oblique: ObliqueMargin,
    pub residuals: ResidualNorms,
    pub failures: Vec<NodeFailure>,
    pub pass: bool,
}

/// Relative slack applied to the strict oblique inequality; constants are
/// measured on the same nodes, so boundary cases are met with equality.
const OBLIQUE_SLACK: f64 = 1e-12;

fn fail(node: &ZNode, reason: String) -> NodeFailure {
    NodeFailure { y: [node.y.x, node.y.y], reason }
}

/// Builds `z`, linearizes at every node and checks uniform ellipticity of
/// `−Ã` and `−b₁ > c₀⁻¹c₂⁻³` on `Σ`.
pub fn certify(pb: &LocalProblem, opts: &CertifyOptions) -> Result<Certificate, HodographError> {
    let grid = build_z(pb.w.as_ref(), pb.radius(), opts.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let xis: Vec<Point> = (0..opts.directions)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Point::new(t.cos(), t.sin()) * rng.gen_range(0.1..2.0)
        })
        .collect();

    let mut failures = Vec::new();
    let (mut c0, mut c2): (f64, f64) = (1.0, 1.0);
    let (mut jac, mut push, mut quad): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut ell = Range { min: f64::INFINITY, max: f64::NEG_INFINITY };
    let mut sigma = Vec::new();
    for node in &grid.nodes {
        let aj = pb.a.jet(node.x).value;
        let ev = sym_eigenvalues(&aj);
        c0 = c0.max(ev[1]).max(1.0 / ev[0]);
        let w1 = node.grad_w.x;
        if !(w1 > 0.0 && node.dz.x.is_finite() && node.dz.y.is_finite()) {
            c2 = f64::INFINITY;
            failures.push(fail(node, format!("∂₁w = {w1:e} is not positive")));
            continue;
        }
        c2 = c2.max(w1).max(1.0 / w1);
        jac = jac.max(node.jacobian_defect());
        push = push.max(node.pushforward_defect());
        let gv = if node.on_sigma() && opts.sigma == SigmaData::Manufactured {
            match manufactured_gradient(&aj, node.tilde_grad(), pb.v.jet(node.x).gradient) {
                Some(g) => g,
                None => {
                    failures.push(fail(node, "(A − I)∇w = 0; no boundary data solves b = 0".into()));
                    continue;
                }
            }
        } else {
            pb.v.jet(node.x).gradient
        };
        let lin = linearize_with(pb, node, gv);
        let me = sym_eigenvalues(&(-lin.a_tilde));
        if !(me[0] > 0.0 && me[1].is_finite()) {
            failures.push(fail(node, format!("−Ã has eigenvalues {me:?}")));
        }
        ell.min = ell.min.min(me[0]);
        ell.max = ell.max.max(me[1]);
        for xi in &xis {
            let r = -xi.dot(&(lin.a_tilde * xi)) / xi.norm_squared();
            ell.min = ell.min.min(r);
            ell.max = ell.max.max(r);
            quad = quad.max(quadratic_form_defect(&aj, node, &lin.a_tilde, *xi));
        }
        if node.on_sigma() {
            let gw = node.grad_w;
            let c3 = -gw.dot(&((aj - crate::Mat2::identity()) * gv)) / gw.norm();
            sigma.push((*node, lin, c3));
        }
    }

    let bound = 1.0 / (c0 * c2.powi(3));
    let mut oblique = ObliqueMargin { bound, min_neg_b1: f64::INFINITY, margin: f64::INFINITY, worst_node: [f64::NAN; 2] };
    let (mut c3_min, mut c3_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut bmax, mut b1gap): (f64, f64) = (0.0, 0.0);
    for (node, lin, c3) in &sigma {
        let nb1 = -lin.b1;
        if !(nb1 > 0.0 && nb1 >= bound * (1.0 - OBLIQUE_SLACK)) {
            failures.push(fail(node, format!("−b₁ = {nb1:e} does not exceed c₀⁻¹c₂⁻³ = {bound:e}")));
        }
        if !(nb1 >= oblique.min_neg_b1) {
            oblique.min_neg_b1 = nb1;
            oblique.worst_node = [node.y.x, node.y.y];
        }
        c3_min = c3_min.min(*c3);
        c3_max = c3_max.max(*c3);
        bmax = bmax.max(lin.b.abs());
        b1gap = b1gap.max((lin.b1 - lin.b1_raw).abs());
    }
    oblique.margin = oblique.min_neg_b1 - bound;
    failures.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal));
    let c4 = ell.max.max(1.0 / ell.min);
    let pass = failures.is_empty() && c4.is_finite() && c2.is_finite();
    Ok(Certificate {
        frame: pb.frame,
        grid: GridReport { n1: grid.spec.n1, n2: grid.spec.n2, y1max: grid.y1max, y2max: grid.y2max },
        constants: MeasuredConstants { c0, c1: pb.frame.c1, c2, c3_min, c3_max, c4 },
        ellipticity: ell,
        oblique,
        residuals: ResidualNorms {
            roundtrip: grid.roundtrip,
            jacobian: jac,
            pushforward: push,
            quadratic_form: quad,
            boundary: bmax,
            b1_forms: b1gap,
        },
        failures,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodograph::fields::{FnMatrix, FnScalar};
    use crate::Mat2;
    use std::sync::Arc;

    fn flat(a: Mat2) -> LocalProblem {
        LocalProblem::aligned(
            Arc::new(FnMatrix::constant(a)),
            Arc::new(FnScalar::constant(1.0)),
            Arc::new(FnScalar::cosine_wave(1.0, 2.0, Point::new(0.0, 1.0), 0.0)),
            Arc::new(FnScalar::quadratic(0.0, Point::new(1.0, 0.0), Mat2::zeros())),
            2.0,
            0.5,
        )
    }

    #[test]
    fn identity_case_passes_on_the_boundary_of_the_bound() {
        let c = certify(&flat(Mat2::identity()), &CertifyOptions { directions: 50, ..Default::default() }).unwrap();
        assert!(c.pass, "{:?}", c.failures);
        assert!((c.ellipticity.min - 1.0).abs() < 1e-14 && (c.ellipticity.max - 1.0).abs() < 1e-14);
        assert_eq!(c.constants.c0, 1.0);
        assert_eq!(c.constants.c2, 1.0);
        assert_eq!(c.oblique.bound, 1.0);
        assert_eq!(c.oblique.min_neg_b1, 1.0);
        assert_eq!(c.oblique.margin, 0.0);
    }

    #[test]
    fn degenerate_w_fails_at_the_origin() {
        // w = x₁(x₁² + x₂²) has ∂₁w = 0 at P only.
        let w = FnScalar::new(|x: Point| crate::hodograph::fields::ScalarJet {
            value: x.x * (x.x * x.x + x.y * x.y),
            gradient: Point::new(3.0 * x.x * x.x + x.y * x.y, 2.0 * x.x * x.y),
            hessian: Mat2::new(6.0 * x.x, 2.0 * x.y, 2.0 * x.y, 2.0 * x.x),
        });
        let pb = LocalProblem { w: Arc::new(w), ..flat(Mat2::identity() * 2.0) };
        let c = certify(&pb, &CertifyOptions { directions: 20, ..Default::default() }).unwrap();
        assert!(!c.pass);
        assert!(!c.failures.is_empty());
        assert!(c.failures.iter().all(|f| f.y == [0.0, 0.0]), "{:?}", c.failures);
    }

    #[test]
    fn manufactured_sigma_data_zeroes_b() {
        let c =
            certify(&flat(Mat2::new(2.0, 0.3, 0.3, 1.5)), &CertifyOptions { directions: 20, sigma: SigmaData::Manufactured, ..Default::default() })
                .unwrap();
        assert!(c.pass);
        assert!(c.residuals.boundary < 1e-12);
        assert!(c.residuals.b1_forms < 1e-10);
        assert!(c.oblique.margin > 0.0);
    }
}
