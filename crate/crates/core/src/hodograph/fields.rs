//! Real scalar and matrix fields with derivatives, as consumed by the
//! hodograph transform.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::HodographError;
use crate::{Mat2, Point};

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub gradient: Point,
    pub hessian: Mat2,
}

/// Value and first partials `[∂₁A, ∂₂A]` of a matrix field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixJet {
    pub value: Mat2,
    pub partials: [Mat2; 2],
}

impl MatrixJet {
    /// Row vector `(Σ_i ∂_i a_ij)_j`.
    pub fn divergence(&self) -> Point {
        let [d1, d2] = &self.partials;
        Point::new(d1[(0, 0)] + d2[(1, 0)], d1[(0, 1)] + d2[(1, 1)])
    }

    /// `∇·(M∇f)` for `M = A − shift·I` and the jet of `f`.
    pub fn div_flux(&self, f: &ScalarJet, shift: f64) -> f64 {
        let m = self.value - Mat2::identity() * shift;
        (m * f.hessian).trace() + self.divergence().dot(&f.gradient)
    }
}

pub trait ScalarField: Send + Sync {
    fn jet(&self, x: Point) -> ScalarJet;

    fn value(&self, x: Point) -> f64 {
        self.jet(x).value
    }
}

pub trait MatrixField: Send + Sync {
    fn jet(&self, x: Point) -> MatrixJet;
}

/// Closed-form scalar field from a closure returning the full jet.
#[derive(Clone)]
pub struct FnScalar(pub Arc<dyn Fn(Point) -> ScalarJet + Send + Sync>);

impl FnScalar {
    pub fn new(f: impl Fn(Point) -> ScalarJet + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| ScalarJet { value: c, gradient: Point::zeros(), hessian: Mat2::zeros() })
    }

    /// `a·x + ½xᵀHx + c`.
    pub fn quadratic(c: f64, a: Point, h: Mat2) -> Self {
        let h = 0.5 * (h + h.transpose());
        Self::new(move |x| ScalarJet { value: c + a.dot(&x) + 0.5 * x.dot(&(h * x)), gradient: a + h * x, hessian: h })
    }

    /// `amp·cos(k d·x + φ)`.
    pub fn cosine_wave(amp: f64, k: f64, d: Point, phase: f64) -> Self {
        Self::new(move |x| {
            let t = k * d.dot(&x) + phase;
            ScalarJet { value: amp * t.cos(), gradient: -amp * k * t.sin() * d, hessian: -amp * k * k * t.cos() * d * d.transpose() }
        })
    }
}

impl ScalarField for FnScalar {
    fn jet(&self, x: Point) -> ScalarJet {
        (self.0)(x)
    }
}

/// Closed-form matrix field from a closure.
#[derive(Clone)]
pub struct FnMatrix(pub Arc<dyn Fn(Point) -> MatrixJet + Send + Sync>);

impl FnMatrix {
    pub fn new(f: impl Fn(Point) -> MatrixJet + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(a: Mat2) -> Self {
        Self::new(move |_| MatrixJet { value: a, partials: [Mat2::zeros(); 2] })
    }
}

impl MatrixField for FnMatrix {
    fn jet(&self, x: Point) -> MatrixJet {
        (self.0)(x)
    }
}

/// `x ↦ sign · f(P + Qᵀx)`: a scalar field seen in the rotated frame.
#[derive(Clone)]
pub struct RotatedScalar {
    pub inner: Arc<dyn ScalarField>,
    pub origin: Point,
    pub q: Mat2,
    pub sign: f64,
}

impl ScalarField for RotatedScalar {
    fn jet(&self, x: Point) -> ScalarJet {
        let j = self.inner.jet(self.origin + self.q.transpose() * x);
        ScalarJet {
            value: self.sign * j.value,
            gradient: self.sign * (self.q * j.gradient),
            hessian: self.sign * (self.q * j.hessian * self.q.transpose()),
        }
    }
}

/// `x ↦ Q A(P + Qᵀx) Qᵀ`.
#[derive(Clone)]
pub struct RotatedMatrix {
    pub inner: Arc<dyn MatrixField>,
    pub origin: Point,
    pub q: Mat2,
}

impl MatrixField for RotatedMatrix {
    fn jet(&self, x: Point) -> MatrixJet {
        let j = self.inner.jet(self.origin + self.q.transpose() * x);
        let q = &self.q;
        let rot = |m: Mat2| q * m * q.transpose();
        let d = |i: usize| rot(j.partials[0] * q[(i, 0)] + j.partials[1] * q[(i, 1)]);
        MatrixJet { value: rot(j.value), partials: [d(0), d(1)] }
    }
}

/// Moving least-squares quadratic fit of scattered samples. Second
/// derivatives are only first-order accurate in the sample spacing.
#[derive(Debug, Clone)]
pub struct MlsField {
    points: Vec<Point>,
    values: Vec<f64>,
    radius: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

const MLS_MIN_NEIGHBOURS: usize = 12;

impl MlsField {
    /// `radius` is the initial support radius, typically 2–3 sample spacings.
    pub fn new(points: Vec<Point>, values: Vec<f64>, radius: f64) -> Result<Self, HodographError> {
        if points.len() != values.len() || points.len() < MLS_MIN_NEIGHBOURS || !(radius > 0.0) {
            return Err(HodographError::InvalidParameter(format!("{} points, {} values, radius {radius}", points.len(), values.len())));
        }
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::cell(p, radius)).or_default().push(i);
        }
        Ok(Self { points, values, radius, cells })
    }

    fn cell(p: &Point, size: f64) -> (i64, i64) {
        ((p.x / size).floor() as i64, (p.y / size).floor() as i64)
    }

    fn neighbours(&self, x: Point, rad: f64) -> Vec<usize> {
        let reach = (rad / self.radius).ceil() as i64;
        let (cx, cy) = Self::cell(&x, self.radius);
        let mut out = Vec::new();
        for i in cx - reach..=cx + reach {
            for j in cy - reach..=cy + reach {
                if let Some(ids) = self.cells.get(&(i, j)) {
                    out.extend(ids.iter().copied().filter(|&id| (self.points[id] - x).norm() <= rad));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn try_jet(&self, x: Point) -> Result<ScalarJet, HodographError> {
        let mut rad = self.radius;
        let mut ids = self.neighbours(x, rad);
        for _ in 0..4 {
            if ids.len() >= MLS_MIN_NEIGHBOURS {
                break;
            }
            rad *= 1.5;
            ids = self.neighbours(x, rad);
        }
        if ids.len() < MLS_MIN_NEIGHBOURS {
            return Err(HodographError::Fit { point: [x.x, x.y] });
        }
        // Scaled local coordinates keep the normal matrix well conditioned.
        let mut m = DMatrix::<f64>::zeros(ids.len(), 6);
        let mut b = DVector::<f64>::zeros(ids.len());
        for (r, &id) in ids.iter().enumerate() {
            let d = (self.points[id] - x) / rad;
            let s = 1.0 - d.norm_squared();
            let wt = s * s + 1e-3;
            let row = [1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y];
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = wt * v;
            }
            b[r] = wt * self.values[id];
        }
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let coef = svd.solve(&b, 1e-12 * smax).map_err(|_| HodographError::Fit { point: [x.x, x.y] })?;
        if svd.singular_values.min() < 1e-10 * smax {
            return Err(HodographError::Fit { point: [x.x, x.y] });
        }
        let (s1, s2) = (1.0 / rad, 1.0 / (rad * rad));
        Ok(ScalarJet {
            value: coef[0],
            gradient: Point::new(coef[1], coef[2]) * s1,
            hessian: Mat2::new(2.0 * coef[3], coef[4], coef[4], 2.0 * coef[5]) * s2,
        })
    }
}

impl ScalarField for MlsField {
    /// Non-finite jet when the fit fails; see [`MlsField::try_jet`].
    fn jet(&self, x: Point) -> ScalarJet {
        self.try_jet(x).unwrap_or(ScalarJet { value: f64::NAN, gradient: Point::repeat(f64::NAN), hessian: Mat2::repeat(f64::NAN) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn ScalarField, x: Point) {
        let h = 1e-5;
        let j = f.jet(x);
        for i in 0..2 {
            let e = if i == 0 { Point::new(h, 0.0) } else { Point::new(0.0, h) };
            let (p, m) = (f.jet(x + e), f.jet(x - e));
            assert!(((p.value - m.value) / (2.0 * h) - j.gradient[i]).abs() < 1e-8);
            let dg = (p.gradient - m.gradient) / (2.0 * h);
            assert!((dg - j.hessian.column(i)).norm() < 1e-7);
        }
    }

    #[test]
    fn closed_form_jets_are_consistent() {
        fd_check(&FnScalar::quadratic(0.3, Point::new(1.0, -2.0), Mat2::new(0.5, 0.2, 0.2, -1.0)), Point::new(0.2, 0.4));
        fd_check(&FnScalar::cosine_wave(1.5, 3.0, Point::new(0.6, 0.8), 0.4), Point::new(-0.3, 0.7));
    }

    #[test]
    fn rotated_fields_transform_covariantly() {
        let inner: Arc<dyn ScalarField> = Arc::new(FnScalar::cosine_wave(1.0, 2.0, Point::new(0.6, 0.8), 0.1));
        let th: f64 = 0.7;
        let q = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let rot = RotatedScalar { inner: inner.clone(), origin: Point::new(0.2, -0.1), q, sign: -1.0 };
        fd_check(&rot, Point::new(0.3, 0.2));
        let x = Point::new(0.3, 0.2);
        assert!((rot.value(x) + inner.value(Point::new(0.2, -0.1) + q.transpose() * x)).abs() < 1e-15);

        let a = FnMatrix::new(|x: Point| MatrixJet {
            value: Mat2::new(2.0 + x.x * x.y, 0.3 * x.x, 0.3 * x.x, 1.0 + x.y),
            partials: [Mat2::new(x.y, 0.3, 0.3, 0.0), Mat2::new(x.x, 0.0, 0.0, 1.0)],
        });
        let ra = RotatedMatrix { inner: Arc::new(a), origin: Point::new(0.2, -0.1), q };
        let h = 1e-6;
        let j = ra.jet(x);
        for i in 0..2 {
            let e = if i == 0 { Point::new(h, 0.0) } else { Point::new(0.0, h) };
            let fd = (ra.jet(x + e).value - ra.jet(x - e).value) / (2.0 * h);
            assert!((fd - j.partials[i]).norm() < 1e-8);
        }
    }

    #[test]
    fn mls_reproduces_quadratics() {
        let f = FnScalar::quadratic(0.5, Point::new(1.0, -0.5), Mat2::new(0.8, 0.3, 0.3, -0.4));
        let mut pts = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                // Jittered lattice.
                let s = ((i * 31 + j * 17) % 7) as f64 * 0.003;
                pts.push(Point::new(i as f64 * 0.05 + s, j as f64 * 0.05 - s));
            }
        }
        let vals = pts.iter().map(|p| f.value(*p)).collect();
        let mls = MlsField::new(pts, vals, 0.12).unwrap();
        let x = Point::new(0.71, 0.63);
        let (a, b) = (mls.try_jet(x).unwrap(), f.jet(x));
        assert!((a.value - b.value).abs() < 1e-10);
        assert!((a.gradient - b.gradient).norm() < 1e-9);
        assert!((a.hessian - b.hessian).norm() < 1e-7);
        assert!(matches!(mls.try_jet(Point::new(10.0, 10.0)), Err(HodographError::Fit { .. })));
    }
}
