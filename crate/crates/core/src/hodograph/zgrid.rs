//! The inverse hodograph map `H⁻¹(y) = (z(y), y′)` on a tensor grid over
//! `V⁺ ∪ Σ`.

use rayon::prelude::*;
use serde::Serialize;

use super::fields::ScalarField;
use crate::error::HodographError;
use crate::{Mat2, Point};

/// Grid intervals in `y₁` and `y′`; `n2` must be even so `y′ = 0` is a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { n1: n, n2: n }
    }
}

/// `z` and its first derivatives at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZNode {
    pub index: (usize, usize),
    pub y: Point,
    /// `H⁻¹(y) = (z(y), y₂)`.
    pub x: Point,
    /// `(∂₁z, ∂₂z)` from `∂₁z = 1/∂₁w`, `∂₂z = −∂₂w/∂₁w`.
    pub dz: Point,
    /// `∇_x w` at `x`.
    pub grad_w: Point,
}

impl ZNode {
    /// `∇̃z = (1, −∂₂z)/∂₁z`.
    pub fn tilde_grad(&self) -> Point {
        Point::new(1.0, -self.dz.y) / self.dz.x
    }

    /// `|DH(x)·D(H⁻¹)(y) − I|_max`.
    pub fn jacobian_defect(&self) -> f64 {
        let dh = Mat2::new(self.grad_w.x, self.grad_w.y, 0.0, 1.0);
        let dinv = Mat2::new(self.dz.x, self.dz.y, 0.0, 1.0);
        (dh * dinv - Mat2::identity()).amax()
    }

    /// `|(∇_x w)∘H⁻¹ − ∇̃z|`.
    pub fn pushforward_defect(&self) -> f64 {
        (self.grad_w - self.tilde_grad()).amax()
    }

    pub fn on_sigma(&self) -> bool {
        self.index.0 == 0
    }
}

#[derive(Debug, Clone)]
pub struct ZGrid {
    pub spec: GridSpec,
    pub y1max: f64,
    pub y2max: f64,
    /// Row-major in `(i, j)`, `y = (i·y1max/n1, −y2max + 2j·y2max/n2)`.
    pub nodes: Vec<ZNode>,
    /// `max |w(z(y), y′) − y₁|`.
    pub roundtrip: f64,
}

impl ZGrid {
    pub fn node(&self, i: usize, j: usize) -> &ZNode {
        &self.nodes[i * (self.spec.n2 + 1) + j]
    }

    pub fn steps(&self) -> (f64, f64) {
        (self.y1max / self.spec.n1 as f64, 2.0 * self.y2max / self.spec.n2 as f64)
    }

    /// `(min, max)` of `∂₁z` over the grid.
    pub fn d1z_range(&self) -> (f64, f64) {
        self.nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), n| (lo.min(n.dz.x), hi.max(n.dz.x)))
    }
}

/// Grid extent: `y′max = r/2` and `y₁max = 0.8·min w` over the arc
/// `|x| = r`, `x₁ > 0`, `|x₂| ≤ y′max`, which keeps every column inside the
/// half-ball.
pub fn grid_extent(w: &dyn ScalarField, radius: f64) -> Result<(f64, f64), HodographError> {
    let y2max = 0.5 * radius;
    let mut wmin = f64::INFINITY;
    for i in 0..=64 {
        let y2 = -y2max + 2.0 * y2max * i as f64 / 64.0;
        let x1 = (radius * radius - y2 * y2).sqrt();
        wmin = wmin.min(w.value(Point::new(x1, y2)));
    }
    if !(wmin > 0.0) {
        return Err(HodographError::InvalidParameter(format!("w is not positive on the outer arc (min {wmin:e})")));
    }
    Ok((0.8 * wmin, y2max))
}

/// Solves `w(x₁, y₂) = y₁` for `x₁ ∈ [−s, s]`, `s = √(r² − y₂²)`, by Newton
/// steps safeguarded with bisection.
pub fn solve_z(w: &dyn ScalarField, y: Point, radius: f64) -> Result<ZNode, HodographError> {
    let bracket_err = HodographError::Bracket { y1: y.x, y2: y.y };
    if !(y.y.abs() < radius) {
        return Err(bracket_err);
    }
    let s = (radius * radius - y.y * y.y).sqrt();
    let f = |x1: f64| w.value(Point::new(x1, y.y)) - y.x;
    let (mut lo, mut hi) = (-s, s);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(bracket_err);
    }
    let mut x = if fhi == 0.0 {
        hi
    } else if flo == 0.0 {
        lo
    } else {
        0.0f64.clamp(lo, hi)
    };
    for _ in 0..200 {
        let j = w.jet(Point::new(x, y.y));
        let fx = j.value - y.x;
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / j.gradient.x;
        let next = if j.gradient.x > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs());
        x = next;
        if done {
            break;
        }
    }
    let xp = Point::new(x, y.y);
    let g = w.jet(xp).gradient;
    Ok(ZNode { index: (0, 0), y, x: xp, dz: Point::new(1.0 / g.x, -g.y / g.x), grad_w: g })
}

/// Builds `z` on the `(n1 + 1) × (n2 + 1)` grid over `[0, y₁max] × [−y′max, y′max]`.
pub fn build_z(w: &dyn ScalarField, radius: f64, spec: GridSpec) -> Result<ZGrid, HodographError> {
    if spec.n1 == 0 || spec.n2 == 0 || !spec.n2.is_multiple_of(2) {
        return Err(HodographError::InvalidParameter(format!("grid {spec:?}: need n1 ≥ 1 and even n2 ≥ 2")));
    }
    let (y1max, y2max) = grid_extent(w, radius)?;
    let ids: Vec<(usize, usize)> = (0..=spec.n1).flat_map(|i| (0..=spec.n2).map(move |j| (i, j))).collect();
    let nodes: Vec<ZNode> = ids
        .par_iter()
        .map(|&(i, j)| {
            let y = Point::new(y1max * i as f64 / spec.n1 as f64, -y2max + 2.0 * y2max * j as f64 / spec.n2 as f64);
            solve_z(w, y, radius).map(|mut n| {
                n.index = (i, j);
                n
            })
        })
        .collect::<Result<_, _>>()?;
    let roundtrip = nodes.iter().map(|n| (w.value(n.x) - n.y.x).abs()).fold(0.0, f64::max);
    Ok(ZGrid { spec, y1max, y2max, nodes, roundtrip })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodograph::fields::{FnScalar, ScalarJet};

    #[test]
    fn identity_hodograph() {
        let w = FnScalar::quadratic(0.0, Point::new(1.0, 0.0), Mat2::zeros());
        let g = build_z(&w, 0.5, GridSpec::square(8)).unwrap();
        for n in &g.nodes {
            assert!((n.x.x - n.y.x).abs() < 1e-15);
            assert!((n.tilde_grad() - Point::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!((g.y1max - 0.8 * (0.25f64 - 0.0625).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn affine_hodograph_matches_closed_form() {
        let w = FnScalar::quadratic(0.0, Point::new(2.0, 1.0), Mat2::zeros());
        let g = build_z(&w, 0.5, GridSpec::square(8)).unwrap();
        for n in &g.nodes {
            assert!((n.x.x - (n.y.x - n.y.y) / 2.0).abs() < 1e-14);
            assert_eq!(n.dz, Point::new(0.5, -0.5));
            assert!((n.tilde_grad() - Point::new(2.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_round_trip() {
        let w = FnScalar::new(|x: Point| {
            let (s, c) = x.y.sin_cos();
            ScalarJet {
                value: x.x + 0.1 * s * x.x * x.x,
                gradient: Point::new(1.0 + 0.2 * s * x.x, 0.1 * c * x.x * x.x),
                hessian: Mat2::new(0.2 * s, 0.2 * c * x.x, 0.2 * c * x.x, -0.1 * s * x.x * x.x),
            }
        });
        let g = build_z(&w, 0.6, GridSpec::square(16)).unwrap();
        assert!(g.roundtrip < 1e-12, "{}", g.roundtrip);
        for n in &g.nodes {
            assert!(n.dz.x * n.grad_w.x - 1.0 < 1e-8);
            assert!(n.jacobian_defect() < 1e-10 && n.pushforward_defect() < 1e-10);
        }
    }

    #[test]
    fn bracket_failure_is_reported() {
        let w = FnScalar::quadratic(0.0, Point::new(1.0, 0.0), Mat2::zeros());
        assert_eq!(solve_z(&w, Point::new(2.0, 0.0), 0.5), Err(HodographError::Bracket { y1: 2.0, y2: 0.0 }));
    }
}
