//! Rigid change of coordinates placing the boundary point at the origin with
//! `ν⊤A = (−c₁, 0)`.

use serde::Serialize;

use crate::error::HodographError;
use crate::{Mat2, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HodographFrame {
    /// Boundary point `P` in the original coordinates.
    pub origin: [f64; 2],
    /// Row-major rotation `Q`; new coordinates are `Q(x − P)`.
    pub rotation: [[f64; 2]; 2],
    /// `c₁ = |A(P)ν|`.
    pub c1: f64,
    /// `−1` when `w` and `v` were negated to make `ν⊤A∇w(P) < 0`.
    pub sign: f64,
    /// Half-ball radius.
    pub radius: f64,
}

impl HodographFrame {
    pub fn q(&self) -> Mat2 {
        let r = &self.rotation;
        Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1])
    }

    pub fn p(&self) -> Point {
        Point::new(self.origin[0], self.origin[1])
    }

    pub fn to_local(&self, x: Point) -> Point {
        self.q() * (x - self.p())
    }
}

/// Rotation `Q` with `Q(A(P)ν) = −|A(P)ν| e₁`. When `grad_w` is supplied and
/// `ν⊤A∇w(P) > 0`, the frame records `sign = −1`.
pub fn align_frame(p: Point, a: &Mat2, nu: Point, grad_w: Option<Point>, radius: f64) -> Result<HodographFrame, HodographError> {
    if !((nu.norm() - 1.0).abs() < 1e-10) {
        return Err(HodographError::InvalidParameter(format!("normal must be a unit vector, |ν| = {}", nu.norm())));
    }
    if !(radius > 0.0) {
        return Err(HodographError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let an = a * nu;
    let c1 = an.norm();
    assert!(c1 > 0.0, "A(P)ν vanishes; A is not elliptic at P");
    let u = an / c1;
    let q = Mat2::new(-u.x, -u.y, u.y, -u.x);
    let sign = match grad_w {
        Some(g) if an.dot(&g) > 0.0 => -1.0,
        _ => 1.0,
    };
    Ok(HodographFrame { origin: [p.x, p.y], rotation: [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]], c1, sign, radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_frame(a: Mat2, nu: Point) -> HodographFrame {
        let f = align_frame(Point::zeros(), &a, nu, None, 0.5).unwrap();
        let q = f.q();
        assert!((q.transpose() * q - Mat2::identity()).norm() < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
        // ν⊤A in the rotated frame.
        let row = (q * a * q.transpose()).transpose() * (q * nu);
        assert!((row - Point::new(-f.c1, 0.0)).norm() < 1e-10);
        f
    }

    #[test]
    fn identity_medium_downward_normal() {
        let f = check_frame(Mat2::identity(), Point::new(0.0, -1.0));
        assert!((f.q() * Point::new(0.0, -1.0) - Point::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.c1, 1.0);
    }

    #[test]
    fn isotropic_scaling() {
        for th in [0.0, 0.4, 2.0, -2.5] {
            let f = check_frame(Mat2::identity() * 2.0, Point::new(f64::cos(th), f64::sin(th)));
            assert!((f.c1 - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_anisotropy() {
        let a = Mat2::new(2.0, 0.0, 0.0, 1.0);
        let f = check_frame(a, Point::new(1.0, 0.0));
        assert!((f.c1 - 2.0).abs() < 1e-15);
        assert!((f.q() * (a * Point::new(1.0, 0.0)) - Point::new(-2.0, 0.0)).norm() < 1e-14);
        let g = check_frame(Mat2::new(2.0, 0.5, 0.5, 1.0), Point::new(0.6, 0.8));
        assert!(g.c1 > 0.0);
    }

    #[test]
    fn sign_convention_follows_w() {
        let a = Mat2::identity();
        let nu = Point::new(-1.0, 0.0);
        let f = align_frame(Point::zeros(), &a, nu, Some(Point::new(1.0, 0.0)), 0.5).unwrap();
        assert_eq!(f.sign, 1.0);
        let g = align_frame(Point::zeros(), &a, nu, Some(Point::new(-1.0, 0.0)), 0.5).unwrap();
        assert_eq!(g.sign, -1.0);
    }
}
