//! Inhomogeneities `(A, n, Ω)`: domain geometry, coefficient fields and
//! pointwise checks of the structural conditions on `∂Ω`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{IncidentError, MediaError};
use crate::incident::IncidentField;
use crate::{Mat2, Point};

/// Parameters closer than this to a polygon vertex are treated as the vertex.
const VERTEX_EPS: f64 = 1e-12;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bounded domain `Ω` with a boundary sampler `t ∈ [0, 1) → (x, ν)`.
#[derive(Clone)]
pub enum Domain {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned square `corner + [0, side]²`.
    Square {
        corner: Point,
        side: f64,
    },
    /// Counterclockwise vertex list.
    Polygon {
        vertices: Vec<Point>,
    },
    /// `{center + r(cos θ, sin θ) : r < ρ(θ)}` with `dρ = ρ'`.
    StarShaped {
        center: Point,
        rho: RadialFn,
        drho: RadialFn,
    },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Disk { center, radius } => write!(f, "Disk({}, {}; r={})", center.x, center.y, radius),
            Domain::Square { corner, side } => write!(f, "Square({}, {}; side={})", corner.x, corner.y, side),
            Domain::Polygon { vertices } => write!(f, "Polygon({} vertices)", vertices.len()),
            Domain::StarShaped { center, .. } => write!(f, "StarShaped({}, {})", center.x, center.y),
        }
    }
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Square { corner: Point::zeros(), side: 1.0 }
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        Domain::Disk { center, radius }
    }

    /// Polygon from vertices, reordered counterclockwise if needed.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self, MediaError> {
        if vertices.len() < 3 {
            return Err(MediaError::InvalidParameter("polygon needs at least 3 vertices".into()));
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(MediaError::InvalidParameter("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Domain::Polygon { vertices })
    }

    /// Corners of polygonal domains, counterclockwise. Empty for smooth domains.
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Domain::Square { corner, side } => {
                vec![*corner, corner + Vector2::new(*side, 0.0), corner + Vector2::new(*side, *side), corner + Vector2::new(0.0, *side)]
            }
            Domain::Polygon { vertices } => vertices.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_polygonal(&self) -> bool {
        matches!(self, Domain::Square { .. } | Domain::Polygon { .. })
    }

    /// Closed membership test (boundary points count as inside).
    pub fn contains(&self, x: Point) -> bool {
        match self {
            Domain::Disk { center, radius } => (x - center).norm() <= radius * (1.0 + 1e-12),
            Domain::Square { corner, side } => {
                let tol = 1e-12 * side.max(1.0);
                let s = x - corner;
                s.x >= -tol && s.y >= -tol && s.x <= side + tol && s.y <= side + tol
            }
            Domain::Polygon { vertices } => point_in_polygon(vertices, x),
            Domain::StarShaped { center, rho, .. } => {
                let d = x - center;
                let r = d.norm();
                r <= rho(d.y.atan2(d.x)) * (1.0 + 1e-12)
            }
        }
    }

    /// Boundary point and outward unit normal at parameter `t ∈ [0, 1)`.
    /// Returns `None` at polygon vertices, where the normal is undefined.
    pub fn boundary_sample(&self, t: f64) -> Option<(Point, Point)> {
        let t = t.rem_euclid(1.0);
        match self {
            Domain::Disk { center, radius } => {
                let (s, c) = (TAU * t).sin_cos();
                let nu = Vector2::new(c, s);
                Some((center + *radius * nu, nu))
            }
            Domain::Square { .. } | Domain::Polygon { .. } => {
                let verts = self.vertices();
                polygon_sample(&verts, t)
            }
            Domain::StarShaped { center, rho, drho } => {
                let th = TAU * t;
                let (s, c) = th.sin_cos();
                let r = rho(th);
                let dr = drho(th);
                let tangent = Vector2::new(dr * c - r * s, dr * s + r * c);
                let nu = Vector2::new(tangent.y, -tangent.x).normalize();
                Some((center + r * Vector2::new(c, s), nu))
            }
        }
    }

    /// Boundary parameters of the polygon vertices.
    pub fn vertex_parameters(&self) -> Vec<f64> {
        let verts = self.vertices();
        if verts.is_empty() {
            return Vec::new();
        }
        let lengths = edge_lengths(&verts);
        let total: f64 = lengths.iter().sum();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(verts.len());
        for l in lengths {
            out.push(acc / total);
            acc += l;
        }
        out
    }

    /// Bounding-box center.
    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounding_box();
        0.5 * (lo + hi)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let pts = self.interface_polygon(0.01).0;
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Largest distance from [`Domain::center`] to the boundary.
    pub fn circumradius(&self) -> f64 {
        let c = self.center();
        match self {
            Domain::Disk { radius, .. } => *radius,
            _ if self.is_polygonal() => self.vertices().iter().map(|v| (v - c).norm()).fold(0.0, f64::max),
            _ => (0..4096).filter_map(|i| self.boundary_sample(i as f64 / 4096.0)).map(|(p, _)| (p - c).norm()).fold(0.0, f64::max),
        }
    }

    /// Closed boundary polygon with edges no longer than `h`. The flag is
    /// `true` when the polygon coincides with `∂Ω` (polygonal domains); smooth
    /// domains get an inscribed polygon.
    pub fn interface_polygon(&self, h: f64) -> (Vec<Point>, bool) {
        assert!(h > 0.0);
        if self.is_polygonal() {
            let verts = self.vertices();
            let mut out = Vec::new();
            for i in 0..verts.len() {
                let a = verts[i];
                let b = verts[(i + 1) % verts.len()];
                let n = ((b - a).norm() / h).ceil().max(1.0) as usize;
                for j in 0..n {
                    out.push(a + (b - a) * (j as f64 / n as f64));
                }
            }
            return (out, true);
        }
        // Equal parameter steps, fine enough for the fastest boundary speed.
        let probe = 2048;
        let mut prev = self.boundary_sample(0.0).unwrap().0;
        let mut max_speed: f64 = 0.0;
        for i in 1..=probe {
            let p = self.boundary_sample(i as f64 / probe as f64).unwrap().0;
            let seg = (p - prev).norm();
            max_speed = max_speed.max(seg * probe as f64);
            prev = p;
        }
        let n = ((max_speed / h).ceil() as usize).max(8);
        let pts = (0..n).map(|i| self.boundary_sample(i as f64 / n as f64).unwrap().0).collect();
        (pts, false)
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum::<f64>()
}

fn edge_lengths(v: &[Point]) -> Vec<f64> {
    (0..v.len()).map(|i| (v[(i + 1) % v.len()] - v[i]).norm()).collect()
}

fn polygon_sample(verts: &[Point], t: f64) -> Option<(Point, Point)> {
    let lengths = edge_lengths(verts);
    let total: f64 = lengths.iter().sum();
    let mut s = t * total;
    for (i, l) in lengths.iter().enumerate() {
        if s <= *l || i + 1 == lengths.len() {
            let local = (s / l).clamp(0.0, 1.0);
            if !(VERTEX_EPS..=1.0 - VERTEX_EPS).contains(&local) {
                return None;
            }
            let a = verts[i];
            let b = verts[(i + 1) % verts.len()];
            let d = (b - a) / *l;
            return Some((a + (b - a) * local, Vector2::new(d.y, -d.x)));
        }
        s -= l;
    }
    None
}

fn point_in_polygon(v: &[Point], x: Point) -> bool {
    let n = v.len();
    // On-edge points count as inside.
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let ab = b - a;
        let ax = x - a;
        let cross = ab.x * ax.y - ab.y * ax.x;
        let dot = ab.dot(&ax);
        if cross.abs() <= 1e-12 * ab.norm_squared().max(1.0) && dot >= 0.0 && dot <= ab.norm_squared() {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (v[i], v[j]);
        if (pi.y > x.y) != (pj.y > x.y) && x.x < (pj.x - pi.x) * (x.y - pi.y) / (pj.y - pi.y) + pi.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Interior coefficient formulas `x ↦ (A(x), n(x))`.
pub trait CoefficientField: Send + Sync {
    fn eval(&self, x: Point) -> Result<(Mat2, f64), MediaError>;

    /// `[∂_{x₁}A, ∂_{x₂}A]`. The default is a central difference.
    fn grad_a(&self, x: Point) -> Result<[Mat2; 2], MediaError> {
        let h = 1e-5;
        let mut out = [Mat2::zeros(); 2];
        for (l, slot) in out.iter_mut().enumerate() {
            let mut e = Vector2::zeros();
            e[l] = h;
            let (ap, _) = self.eval(x + e)?;
            let (am, _) = self.eval(x - e)?;
            *slot = (ap - am) / (2.0 * h);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub a: Mat2,
    pub n: f64,
}

impl CoefficientField for ConstantField {
    fn eval(&self, _x: Point) -> Result<(Mat2, f64), MediaError> {
        Ok((self.a, self.n))
    }

    fn grad_a(&self, _x: Point) -> Result<[Mat2; 2], MediaError> {
        Ok([Mat2::zeros(); 2])
    }
}

/// `A = a(|x − c|) I`, `n = n(|x − c|)`.
#[derive(Clone)]
pub struct RadialField {
    pub center: Point,
    pub a: RadialFn,
    pub n: RadialFn,
}

impl CoefficientField for RadialField {
    fn eval(&self, x: Point) -> Result<(Mat2, f64), MediaError> {
        let r = (x - self.center).norm();
        Ok((Mat2::identity() * (self.a)(r), (self.n)(r)))
    }
}

/// A boundary-fixing perturbation `Ψ` with its Jacobian.
pub trait VectorField: Send + Sync {
    fn value(&self, x: Point) -> Point;
    fn jacobian(&self, x: Point) -> Mat2;
}

/// `Ψ(x) = 16 s₁(1−s₁) s₂(1−s₂) d` with `s = (x − corner)/side`, zero outside
/// the square. Vanishes on the boundary with vanishing Jacobian at the corners.
#[derive(Debug, Clone, Copy)]
pub struct SquareBump {
    pub corner: Point,
    pub side: f64,
    pub direction: Point,
}

impl SquareBump {
    pub fn unit(direction: Point) -> Self {
        Self { corner: Point::zeros(), side: 1.0, direction }
    }

    fn local(&self, x: Point) -> Option<Point> {
        let s = (x - self.corner) / self.side;
        (s.x > 0.0 && s.x < 1.0 && s.y > 0.0 && s.y < 1.0).then_some(s)
    }
}

impl VectorField for SquareBump {
    fn value(&self, x: Point) -> Point {
        match self.local(x) {
            Some(s) => 16.0 * s.x * (1.0 - s.x) * s.y * (1.0 - s.y) * self.direction,
            None => Point::zeros(),
        }
    }

    fn jacobian(&self, x: Point) -> Mat2 {
        match self.local(x) {
            Some(s) => {
                let g1 = 16.0 * (1.0 - 2.0 * s.x) * s.y * (1.0 - s.y) / self.side;
                let g2 = 16.0 * s.x * (1.0 - s.x) * (1.0 - 2.0 * s.y) / self.side;
                self.direction * Vector2::new(g1, g2).transpose()
            }
            None => Mat2::zeros(),
        }
    }
}

/// `Φ(x) = x + εΨ(x)`.
#[derive(Clone)]
pub struct DiffeoSpec {
    pub eps: f64,
    pub psi: Arc<dyn VectorField>,
}

impl fmt::Debug for DiffeoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffeoSpec(eps = {})", self.eps)
    }
}

impl DiffeoSpec {
    pub fn new(eps: f64, psi: Arc<dyn VectorField>) -> Self {
        Self { eps, psi }
    }

    pub fn forward(&self, x: Point) -> Point {
        x + self.eps * self.psi.value(x)
    }

    pub fn jacobian(&self, x: Point) -> Mat2 {
        Mat2::identity() + self.eps * self.psi.jacobian(x)
    }

    /// `Φ⁻¹(y)` by damped Newton started at `y`.
    pub fn inverse(&self, y: Point) -> Result<Point, MediaError> {
        let tol = 1e-12;
        let mut x = y;
        let mut res = self.forward(x) - y;
        for it in 0..50 {
            if res.norm() <= tol {
                return Ok(x);
            }
            let j = self.jacobian(x);
            let step =
                j.try_inverse().map(|ji| ji * res).ok_or(MediaError::InversionFailed { point: [y.x, y.y], iterations: it, residual: res.norm() })?;
            let mut lambda = 1.0;
            loop {
                let cand = x - lambda * step;
                let r = self.forward(cand) - y;
                if r.norm() < res.norm() || lambda < 1e-4 {
                    x = cand;
                    res = r;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if res.norm() <= tol {
            Ok(x)
        } else {
            Err(MediaError::InversionFailed { point: [y.x, y.y], iterations: 50, residual: res.norm() })
        }
    }

    /// Checks `det DΦ > 0` on a grid over `domain` and `Φ = id` on sampled
    /// boundary points. Returns the smallest determinant.
    pub fn validate(&self, domain: &Domain, grid: usize) -> Result<f64, MediaError> {
        let (lo, hi) = domain.bounding_box();
        let mut min_det = f64::INFINITY;
        for i in 0..=grid {
            for j in 0..=grid {
                let x = lo + (hi - lo).component_mul(&Vector2::new(i as f64, j as f64)) / grid as f64;
                if !domain.contains(x) {
                    continue;
                }
                let det = self.jacobian(x).determinant();
                if !(det > 0.0) {
                    return Err(MediaError::NotOrientationPreserving { point: [x.x, x.y], det });
                }
                min_det = min_det.min(det);
            }
        }
        for i in 0..256 {
            if let Some((p, _)) = domain.boundary_sample((i as f64 + 0.5) / 256.0) {
                if (self.forward(p) - p).norm() > 1e-12 {
                    return Err(MediaError::InvalidParameter(format!("diffeomorphism moves boundary point ({}, {})", p.x, p.y)));
                }
            }
        }
        Ok(min_det)
    }
}

/// `Φ_*(I, 1)`: `A = DΦ DΦᵀ / |det DΦ|`, `n = 1/|det DΦ|`, composed with `Φ⁻¹`.
#[derive(Debug, Clone)]
pub struct PushforwardField {
    pub diffeo: DiffeoSpec,
}

impl CoefficientField for PushforwardField {
    fn eval(&self, y: Point) -> Result<(Mat2, f64), MediaError> {
        let x = self.diffeo.inverse(y)?;
        let j = self.diffeo.jacobian(x);
        let det = j.determinant().abs();
        Ok((j * j.transpose() / det, 1.0 / det))
    }
}

/// An inhomogeneity `(A, n, Ω)` with declared ellipticity constant `c0`.
#[derive(Clone)]
pub struct MediumSpec {
    pub domain: Domain,
    pub field: Arc<dyn CoefficientField>,
    pub label: String,
    pub c0: f64,
}

impl fmt::Debug for MediumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MediumSpec").field("domain", &self.domain).field("label", &self.label).field("c0", &self.c0).finish()
    }
}

impl MediumSpec {
    /// Coefficients at `x`: the interior formulas on the closed domain (the
    /// inside limit on `∂Ω`), `(I, 1)` elsewhere.
    pub fn coefficients(&self, x: Point) -> Result<(Mat2, f64), MediaError> {
        if self.domain.contains(x) {
            self.field.eval(x)
        } else {
            Ok((Mat2::identity(), 1.0))
        }
    }

    /// Interior formulas regardless of membership.
    pub fn interior(&self, x: Point) -> Result<(Mat2, f64), MediaError> {
        self.field.eval(x)
    }

    /// Samples `10³`-style random `(x, ξ)` pairs in the disk of radius
    /// `1.2 × circumradius` and checks `c0⁻¹ ≤ ξᵀAξ/|ξ|² ≤ c0`.
    pub fn check_ellipticity<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<EllipticityReport, MediaError> {
        let c = self.domain.center();
        let rad = 1.2 * self.domain.circumradius();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..samples {
            let r = rad * rng.gen::<f64>().sqrt();
            let th = TAU * rng.gen::<f64>();
            let x = c + r * Vector2::new(th.cos(), th.sin());
            let phi = TAU * rng.gen::<f64>();
            let xi = Vector2::new(phi.cos(), phi.sin());
            let (a, _) = self.coefficients(x)?;
            let q = xi.dot(&(a * xi));
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let slack = 1e-12;
        Ok(EllipticityReport {
            min_form: lo,
            max_form: hi,
            c0: self.c0,
            holds: lo >= (1.0 / self.c0) * (1.0 - slack) && hi <= self.c0 * (1.0 + slack),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub min_form: f64,
    pub max_form: f64,
    pub c0: f64,
    pub holds: bool,
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(a: &Mat2) -> [f64; 2] {
    let m = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let d = (0.25 * (a[(0, 0)] - a[(1, 1)]).powi(2) + a[(0, 1)] * a[(1, 0)]).max(0.0).sqrt();
    [m - d, m + d]
}

/// Ellipticity constant `max(λ_max, 1/λ_min)` of a symmetric matrix.
pub fn ellipticity_constant(a: &Mat2) -> f64 {
    let [l0, l1] = sym_eigenvalues(a);
    l1.max(1.0 / l0)
}

fn check_positive(name: &str, v: f64) -> Result<(), MediaError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(MediaError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Constant `(A, n)` on `domain`.
pub fn constant_medium(domain: Domain, a: Mat2, n: f64, label: &str) -> Result<MediumSpec, MediaError> {
    check_positive("n", n)?;
    if (a[(0, 1)] - a[(1, 0)]).abs() > 0.0 {
        return Err(MediaError::InvalidParameter("A must be symmetric".into()));
    }
    let [l0, _] = sym_eigenvalues(&a);
    if !(l0 > 0.0) {
        return Err(MediaError::InvalidParameter("A must be positive definite".into()));
    }
    if a == Mat2::identity() && n == 1.0 {
        return Err(MediaError::ContrastFree);
    }
    Ok(MediumSpec { domain, field: Arc::new(ConstantField { a, n }), label: label.to_string(), c0: ellipticity_constant(&a) })
}

/// `A = aI`, `n = a` on the unit square.
pub fn square_medium(a: f64) -> Result<MediumSpec, MediaError> {
    check_positive("a", a)?;
    if a == 1.0 {
        return Err(MediaError::ContrastFree);
    }
    constant_medium(Domain::unit_square(), Matrix2::identity() * a, a, &format!("square a=n={a}"))
}

/// `A = a(r)I`, `n = n(r)` on the disk of radius `radius` about `center`.
pub fn radial_medium(center: Point, radius: f64, a: RadialFn, n: RadialFn, label: &str) -> Result<MediumSpec, MediaError> {
    check_positive("radius", radius)?;
    let mut c0: f64 = 1.0;
    for i in 0..=1024 {
        let r = radius * i as f64 / 1024.0;
        let av = a(r);
        check_positive("a(r)", av)?;
        check_positive("n(r)", n(r))?;
        c0 = c0.max(av).max(1.0 / av);
    }
    Ok(MediumSpec { domain: Domain::disk(center, radius), field: Arc::new(RadialField { center, a, n }), label: label.to_string(), c0 })
}

/// Pushforward `Φ_*(I, 1)` of free space by a diffeomorphism of `domain`.
pub fn pushforward_medium(diffeo: DiffeoSpec, domain: Domain) -> Result<MediumSpec, MediaError> {
    diffeo.validate(&domain, 64)?;
    let field = PushforwardField { diffeo: diffeo.clone() };
    let (lo, hi) = domain.bounding_box();
    let grid = 64;
    let mut c0: f64 = 1.0;
    for i in 0..=grid {
        for j in 0..=grid {
            let x = lo + (hi - lo).component_mul(&Vector2::new(i as f64, j as f64)) / grid as f64;
            if domain.contains(x) {
                let jac = diffeo.jacobian(x);
                let a = jac * jac.transpose() / jac.determinant().abs();
                c0 = c0.max(ellipticity_constant(&a));
            }
        }
    }
    Ok(MediumSpec {
        domain,
        field: Arc::new(field),
        label: format!("pushforward eps={}", diffeo.eps),
        // Grid sampling can miss the extremum slightly.
        c0: c0 * 1.05,
    })
}

/// Square bump pushforward on the unit square.
pub fn bump_pushforward(eps: f64, direction: Point) -> Result<MediumSpec, MediaError> {
    pushforward_medium(DiffeoSpec::new(eps, Arc::new(SquareBump::unit(direction))), Domain::unit_square())
}

/// One boundary sample of the scan quantity `ν⊤(A − I)∇v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub t: f64,
    pub point: Point,
    pub normal: Point,
    pub value: Complex64,
}

/// A located zero of the scan quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanZero {
    pub t_lo: f64,
    pub t_hi: f64,
    pub t: f64,
    pub point: Point,
    pub normal: Point,
    pub magnitude: f64,
}

/// One-sided limits of the scan quantity at a polygon vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexLimit {
    pub vertex: Point,
    pub before: Complex64,
    pub after: Complex64,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub samples: Vec<ScanSample>,
    pub zeros: Vec<ScanZero>,
    pub identically_zero: bool,
    pub max_abs: f64,
    /// `true` when every sampled value is real.
    pub real_valued: bool,
    pub vertex_limits: Vec<VertexLimit>,
}

fn scan_value(medium: &MediumSpec, v: &IncidentField, t: f64) -> Result<Option<ScanSample>, IncidentError> {
    let Some((p, nu)) = medium.domain.boundary_sample(t) else {
        return Ok(None);
    };
    let (a, _) = medium.interior(p).map_err(|e| IncidentError::InvalidParameter(e.to_string()))?;
    let (_, grad) = v.eval(p)?;
    let c = a - Mat2::identity();
    let cn = c.transpose() * nu;
    Ok(Some(ScanSample { t, point: p, normal: nu, value: grad[0] * cn.x + grad[1] * cn.y }))
}

/// Samples `ν⊤(A − I)∇v` at `samples` equispaced boundary parameters and
/// locates its zeros: sign changes of the real part for real-valued data,
/// refined local minima of `|·|` otherwise.
pub fn nondegeneracy_scan(medium: &MediumSpec, v: &IncidentField, samples: usize) -> Result<ScanReport, IncidentError> {
    if samples < 4 {
        return Err(IncidentError::TooFewSamples { required: 4, got: samples });
    }
    // Shift by half a step so polygon vertices at rational parameters are skipped.
    let offset = 0.5 / samples as f64;
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples {
        if let Some(s) = scan_value(medium, v, i as f64 / samples as f64 + offset)? {
            pts.push(s);
        }
    }
    let max_abs = pts.iter().map(|s| s.value.norm()).fold(0.0, f64::max);
    let real_valued = max_abs < 1e-13 || pts.iter().all(|s| s.value.im.abs() <= 1e-14 * max_abs);
    let mut report =
        ScanReport { samples: pts, zeros: Vec::new(), identically_zero: max_abs < 1e-13, max_abs, real_valued, vertex_limits: Vec::new() };
    for tv in medium.domain.vertex_parameters() {
        let before = scan_value(medium, v, tv - 1e-9)?.map(|s| s.value).unwrap_or_default();
        let after = scan_value(medium, v, tv + 1e-9)?.map(|s| s.value).unwrap_or_default();
        let vertex = medium.domain.boundary_sample(tv + 1e-13).map(|s| s.0).unwrap_or_default();
        report.vertex_limits.push(VertexLimit { vertex, before, after });
    }
    if report.identically_zero {
        return Ok(report);
    }
    let n = report.samples.len();
    let f = |t: f64| scan_value(medium, v, t).map(|s| s.map(|s| s.value));
    let mut zeros = Vec::new();
    for i in 0..n {
        let a = report.samples[i];
        let b_idx = (i + 1) % n;
        let b = report.samples[b_idx];
        let t_hi = if b_idx == 0 { b.t + 1.0 } else { b.t };
        if real_valued {
            if a.value.re == 0.0 || a.value.re * b.value.re < 0.0 {
                let (mut lo, mut hi) = (a.t, t_hi);
                let sign_lo = a.value.re.signum();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    match f(mid)? {
                        Some(val) if val.re.signum() == sign_lo && val.re != 0.0 => lo = mid,
                        Some(_) => hi = mid,
                        None => break,
                    }
                }
                zeros.push(make_zero(medium, v, a.t, t_hi, 0.5 * (lo + hi))?);
            }
        } else {
            let prev = report.samples[(i + n - 1) % n];
            let m_prev = prev.value.norm();
            let m = a.value.norm();
            let m_next = b.value.norm();
            if m <= m_prev && m < m_next {
                let t_lo = if i == 0 { prev.t - 1.0 } else { prev.t };
                let t_star = golden_min(&|t| f(t).map(|o| o.map_or(f64::INFINITY, |v| v.norm())), t_lo, t_hi)?;
                let z = make_zero(medium, v, t_lo, t_hi, t_star)?;
                if z.magnitude <= 1e-6 * max_abs {
                    zeros.push(z);
                }
            }
        }
    }
    zeros.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    report.zeros = zeros;
    Ok(report)
}

fn make_zero(medium: &MediumSpec, v: &IncidentField, t_lo: f64, t_hi: f64, t: f64) -> Result<ScanZero, IncidentError> {
    let t = t.rem_euclid(1.0);
    let s = scan_value(medium, v, t)?;
    let (point, normal, magnitude) = match s {
        Some(s) => (s.point, s.normal, s.value.norm()),
        None => (Point::zeros(), Point::zeros(), f64::NAN),
    };
    Ok(ScanZero { t_lo, t_hi, t, point, normal, magnitude })
}

fn golden_min<F>(f: &F, mut a: f64, mut b: f64) -> Result<f64, IncidentError>
where
    F: Fn(f64) -> Result<f64, IncidentError>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Per-sample values of the two boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliqueSample {
    pub t: f64,
    /// `(Aν·ν)(Aτ·τ) − (Aν·τ)²`.
    pub quantity: f64,
    /// `(Aν·ν) n`.
    pub normal_index: f64,
}

#[derive(Debug, Clone)]
pub struct ObliqueReport {
    pub samples: Vec<ObliqueSample>,
    pub min_quantity: f64,
    pub max_quantity: f64,
    /// `min |quantity − 1|`; the condition holds when this is positive.
    pub min_distance_to_one: f64,
    /// `min |(Aν·ν)n − 1|`.
    pub min_index_distance_to_one: f64,
}

impl ObliqueReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_distance_to_one > tol
    }
}

/// Evaluates the regular oblique derivative quantity with the unit tangent
/// `τ` at `samples` boundary parameters, using the inside limit of `A`.
pub fn regular_oblique_check(medium: &MediumSpec, samples: usize) -> Result<ObliqueReport, MediaError> {
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = (i as f64 + 0.5) / samples as f64;
        let Some((p, nu)) = medium.domain.boundary_sample(t) else { continue };
        let tau = Vector2::new(-nu.y, nu.x);
        let (a, n) = medium.interior(p)?;
        let ann = nu.dot(&(a * nu));
        let att = tau.dot(&(a * tau));
        let ant = nu.dot(&(a * tau));
        out.push(ObliqueSample { t, quantity: ann * att - ant * ant, normal_index: ann * n });
    }
    let min_quantity = out.iter().map(|s| s.quantity).fold(f64::INFINITY, f64::min);
    let max_quantity = out.iter().map(|s| s.quantity).fold(f64::NEG_INFINITY, f64::max);
    let min_distance_to_one = out.iter().map(|s| (s.quantity - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let min_index_distance_to_one = out.iter().map(|s| (s.normal_index - 1.0).abs()).fold(f64::INFINITY, f64::min);
    Ok(ObliqueReport { samples: out, min_quantity, max_quantity, min_distance_to_one, min_index_distance_to_one })
}

/// Angle of a boundary normal, in `(−π, π]`.
pub fn normal_angle(nu: Point) -> f64 {
    nu.y.atan2(nu.x)
}
