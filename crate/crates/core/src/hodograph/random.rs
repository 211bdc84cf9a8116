//! Randomized closed-form triples `(A, w, v)` with controlled constants.

use std::sync::Arc;

use rand::Rng;

use super::fields::{FnMatrix, FnScalar, MatrixJet, ScalarField, ScalarJet};
use super::problem::LocalProblem;
use crate::error::HodographError;
use crate::media::sym_eigenvalues;
use crate::{Mat2, Point};

/// `α + β·x + γ sin(ω·x + φ)`.
#[derive(Debug, Clone, Copy)]
struct SmoothEntry {
    alpha: f64,
    beta: Point,
    gamma: f64,
    omega: Point,
    phi: f64,
}

impl SmoothEntry {
    fn sample<R: Rng>(rng: &mut R, alpha: f64) -> Self {
        Self {
            alpha,
            beta: Point::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
            gamma: rng.gen_range(-0.2..0.2),
            omega: Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            phi: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn eval(&self, x: Point) -> (f64, Point) {
        let t = self.omega.dot(&x) + self.phi;
        (self.alpha + self.beta.dot(&x) + self.gamma * t.sin(), self.beta + self.gamma * t.cos() * self.omega)
    }
}

/// A random problem with its measured constants.
#[derive(Clone)]
pub struct RandomTriple {
    pub problem: LocalProblem,
    pub c0: f64,
    pub c2: f64,
    /// Draws rejected before this one.
    pub rejected: usize,
}

/// `(c₀, c₂)` measured on a polar sample of `B_r ∩ {w ≥ 0}` in the aligned
/// frame; `c₂ = ∞` when `∂₁w ≤ 0` somewhere.
pub fn measure_constants(pb: &LocalProblem, samples: usize) -> (f64, f64) {
    let r = pb.radius();
    let (mut c0, mut c2): (f64, f64) = (1.0, 1.0);
    for i in 0..=samples {
        let rho = r * i as f64 / samples as f64;
        let m = if i == 0 { 1 } else { 4 * samples };
        for j in 0..m {
            let t = std::f64::consts::TAU * j as f64 / m as f64;
            let x = Point::new(rho * t.cos(), rho * t.sin());
            let wj = pb.w.jet(x);
            if wj.value < 0.0 {
                continue;
            }
            let ev = sym_eigenvalues(&pb.a.jet(x).value);
            c0 = c0.max(ev[1]).max(1.0 / ev[0]);
            let w1 = wj.gradient.x;
            c2 = if w1 > 0.0 { c2.max(w1).max(1.0 / w1) } else { f64::INFINITY };
        }
    }
    (c0, c2)
}

fn draw<R: Rng>(rng: &mut R, radius: f64) -> Result<LocalProblem, HodographError> {
    let p = Point::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    // A(x) around a random SPD base matrix.
    let (l1, l2): (f64, f64) = (rng.gen_range(0.4..2.5), rng.gen_range(0.4..2.5));
    let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let rot = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
    let a0 = rot * Mat2::new(l1, 0.0, 0.0, l2) * rot.transpose();
    let e11 = SmoothEntry::sample(rng, a0[(0, 0)]);
    let e12 = SmoothEntry::sample(rng, a0[(0, 1)]);
    let e22 = SmoothEntry::sample(rng, a0[(1, 1)]);
    let a = FnMatrix::new(move |x: Point| {
        let d = x - p;
        let (v11, g11) = e11.eval(d);
        let (v12, g12) = e12.eval(d);
        let (v22, g22) = e22.eval(d);
        MatrixJet { value: Mat2::new(v11, v12, v12, v22), partials: [Mat2::new(g11.x, g12.x, g12.x, g22.x), Mat2::new(g11.y, g12.y, g12.y, g22.y)] }
    });
    // w = g·d + ½dᵀHd + κ sin(d₁d₂), d = x − P.
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let g = Point::new(phi.cos(), phi.sin()) * rng.gen_range(0.8..1.5);
    let h01 = rng.gen_range(-1.0..1.0);
    let h = Mat2::new(rng.gen_range(-1.0..1.0), h01, h01, rng.gen_range(-1.0..1.0));
    let kappa = rng.gen_range(-0.5..0.5);
    let w = FnScalar::new(move |x: Point| {
        let d = x - p;
        let (s, c) = (d.x * d.y).sin_cos();
        let cross = c - d.x * d.y * s;
        ScalarJet {
            value: g.dot(&d) + 0.5 * d.dot(&(h * d)) + kappa * s,
            gradient: g + h * d + kappa * c * Point::new(d.y, d.x),
            hessian: h + kappa * Mat2::new(-d.y * d.y * s, cross, cross, -d.x * d.x * s),
        }
    });
    let k = rng.gen_range(1.0..4.0);
    let dir: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let v = FnScalar::cosine_wave(rng.gen_range(0.5..2.0), k, Point::new(dir.cos(), dir.sin()), rng.gen_range(0.0..std::f64::consts::TAU));
    let n = FnScalar::quadratic(rng.gen_range(0.5..3.0), Point::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)), Mat2::zeros());
    let n0 = n.clone();
    let n_shift: Arc<dyn ScalarField> = Arc::new(FnScalar::new(move |x: Point| n0.jet(x - p)));
    LocalProblem::from_physical(Arc::new(a), n_shift, Arc::new(v), Arc::new(w), k, p, None, radius)
}

/// Draws triples until the measured `c₀ ≤ c0_max` and `c₂ ≤ c2_max` and the
/// hodograph grid fits in the half-ball.
pub fn random_triple<R: Rng>(rng: &mut R, c0_max: f64, c2_max: f64) -> RandomTriple {
    let radius = 0.4;
    let mut rejected = 0;
    loop {
        if let Ok(pb) = draw(rng, radius) {
            let (c0, c2) = measure_constants(&pb, 24);
            if c0 <= c0_max && c2 <= c2_max && super::zgrid::grid_extent(pb.w.as_ref(), radius).is_ok() {
                return RandomTriple { problem: pb, c0, c2, rejected };
            }
        }
        rejected += 1;
    }
}

/// `A = 2I`, `n = 1.5`, `v` a cosine wave and `w = x₁(x₁² + x₂²)`, whose
/// `∂₁w` vanishes at `P = 0`.
pub fn degenerate_problem() -> LocalProblem {
    let w = FnScalar::new(|x: Point| ScalarJet {
        value: x.x * (x.x * x.x + x.y * x.y),
        gradient: Point::new(3.0 * x.x * x.x + x.y * x.y, 2.0 * x.x * x.y),
        hessian: Mat2::new(6.0 * x.x, 2.0 * x.y, 2.0 * x.y, 2.0 * x.x),
    });
    LocalProblem::aligned(
        Arc::new(FnMatrix::constant(Mat2::identity() * 2.0)),
        Arc::new(FnScalar::constant(1.5)),
        Arc::new(FnScalar::cosine_wave(1.0, 2.0, Point::new(0.6, 0.8), 0.2)),
        Arc::new(w),
        2.0,
        0.5,
    )
}
