//! Entire solutions of `Δv + k²v = 0` used as incident fields.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::IncidentError;
use crate::specialfun::{bessel_j, hankel1};
use crate::{Mat2, Point};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Density samples `g(ξ_j)` on `M` equispaced directions `θ_j = 2πj/M` with
/// trapezoid weights `2π/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzDensity {
    pub values: Vec<Complex64>,
}

impl HerglotzDensity {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_fn(m: usize, g: impl Fn(f64) -> Complex64) -> Self {
        Self { values: (0..m).map(|j| g(TAU * j as f64 / m as f64)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.values.len() as f64
    }

    pub fn weight(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.weight(); self.values.len()]
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), IncidentError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "theta,re_g,im_g")?;
        for (j, g) in self.values.iter().enumerate() {
            writeln!(f, "{:.17e},{:.17e},{:.17e}", self.angle(j), g.re, g.im)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, IncidentError> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (lineno, line) in f.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| IncidentError::Io(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 3 {
                return Err(IncidentError::Io(format!("line {}: expected 3 columns", lineno + 1)));
            }
            values.push(Complex64::new(cols[1], cols[2]));
        }
        Ok(Self { values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IncidentKind {
    /// `e^{ikξ·x}`.
    Plane { direction: Point, k: f64 },
    /// `(i/4) H₀⁽¹⁾(k|x − x₀|)`.
    PointSource { source: Point, k: f64 },
    /// `J_m(k|x − c|) e^{imθ}`.
    FourierBessel { order: i32, k: f64, center: Point },
    /// `Σ_j (2π/M) g_j e^{ikξ_j·x}`.
    Herglotz { density: HerglotzDensity, k: f64 },
    /// Finite sum `Σ c_j e^{ikξ_j·x}` of plane waves with a common `k`.
    PlaneWaveSum { terms: Vec<(Complex64, Point)>, k: f64 },
}

/// An incident field `amplitude × kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentField {
    pub kind: IncidentKind,
    pub amplitude: Complex64,
}

fn unit(direction: Point) -> Result<Point, IncidentError> {
    let n = direction.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(IncidentError::InvalidParameter("direction must be a nonzero vector".into()));
    }
    Ok(direction / n)
}

fn check_k(k: f64) -> Result<(), IncidentError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(IncidentError::InvalidParameter(format!("wave number must be positive, got {k}")));
    }
    Ok(())
}

impl IncidentField {
    fn wrap(kind: IncidentKind) -> Self {
        Self { kind, amplitude: Complex64::new(1.0, 0.0) }
    }

    pub fn plane(direction: Point, k: f64) -> Result<Self, IncidentError> {
        check_k(k)?;
        Ok(Self::wrap(IncidentKind::Plane { direction: unit(direction)?, k }))
    }

    pub fn point_source(source: Point, k: f64) -> Result<Self, IncidentError> {
        check_k(k)?;
        Ok(Self::wrap(IncidentKind::PointSource { source, k }))
    }

    pub fn fourier_bessel(order: i32, k: f64, center: Point) -> Result<Self, IncidentError> {
        check_k(k)?;
        Ok(Self::wrap(IncidentKind::FourierBessel { order, k, center }))
    }

    pub fn herglotz(density: HerglotzDensity, k: f64) -> Result<Self, IncidentError> {
        check_k(k)?;
        if density.is_empty() {
            return Err(IncidentError::InvalidParameter("empty Herglotz density".into()));
        }
        Ok(Self::wrap(IncidentKind::Herglotz { density, k }))
    }

    pub fn plane_wave_sum(terms: Vec<(Complex64, Point)>, k: f64) -> Result<Self, IncidentError> {
        check_k(k)?;
        let terms = terms.into_iter().map(|(c, d)| unit(d).map(|d| (c, d))).collect::<Result<_, _>>()?;
        Ok(Self::wrap(IncidentKind::PlaneWaveSum { terms, k }))
    }

    /// `cos(πx₁) cos(πx₂)` as four plane waves with `k = π√2`.
    pub fn square_mode_cos() -> Self {
        Self::square_mode(false)
    }

    /// `sin(πx₁) sin(πx₂)` as four plane waves with `k = π√2`.
    pub fn square_mode_sin() -> Self {
        Self::square_mode(true)
    }

    fn square_mode(sine: bool) -> Self {
        let mut terms = Vec::with_capacity(4);
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let c = if sine { -0.25 * s1 * s2 } else { 0.25 };
                terms.push((Complex64::new(c, 0.0), Point::new(s1 * FRAC_1_SQRT_2, s2 * FRAC_1_SQRT_2)));
            }
        }
        Self::wrap(IncidentKind::PlaneWaveSum { terms, k: PI * SQRT_2 })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { kind: self.kind.clone(), amplitude: self.amplitude * c }
    }

    pub fn k(&self) -> f64 {
        match &self.kind {
            IncidentKind::Plane { k, .. }
            | IncidentKind::PointSource { k, .. }
            | IncidentKind::FourierBessel { k, .. }
            | IncidentKind::Herglotz { k, .. }
            | IncidentKind::PlaneWaveSum { k, .. } => *k,
        }
    }

    /// The field `x ↦ v(Qᵀ(x − t))`, i.e. the experiment moved by the rigid
    /// motion `x ↦ Qx + t`.
    pub fn transformed(&self, q: &Mat2, t: Point) -> Result<Self, IncidentError> {
        let k = self.k();
        let plane = |c: Complex64, d: Point| {
            let qd = q * d;
            (c * Complex64::from_polar(1.0, -k * qd.dot(&t)), qd)
        };
        let kind = match &self.kind {
            IncidentKind::Plane { direction, .. } => IncidentKind::PlaneWaveSum { terms: vec![plane(Complex64::new(1.0, 0.0), *direction)], k },
            IncidentKind::PlaneWaveSum { terms, .. } => IncidentKind::PlaneWaveSum { terms: terms.iter().map(|&(c, d)| plane(c, d)).collect(), k },
            IncidentKind::PointSource { source, .. } => IncidentKind::PointSource { source: q * source + t, k },
            IncidentKind::FourierBessel { order, center, .. } => {
                let alpha = q[(1, 0)].atan2(q[(0, 0)]);
                return Ok(Self {
                    kind: IncidentKind::FourierBessel { order: *order, k, center: q * center + t },
                    amplitude: self.amplitude * Complex64::from_polar(1.0, -(*order as f64) * alpha),
                });
            }
            IncidentKind::Herglotz { density, .. } => IncidentKind::PlaneWaveSum {
                terms: (0..density.len())
                    .map(|j| {
                        let th = density.angle(j);
                        plane(density.values[j] * density.weight(), Point::new(th.cos(), th.sin()))
                    })
                    .collect(),
                k,
            },
        };
        Ok(Self { kind, amplitude: self.amplitude })
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, x: Point) -> Result<(Complex64, [Complex64; 2]), IncidentError> {
        let (v, g) = match &self.kind {
            IncidentKind::Plane { direction, k } => plane_term(Complex64::new(1.0, 0.0), *direction, *k, x),
            IncidentKind::PlaneWaveSum { terms, k } => {
                let mut v = Complex64::default();
                let mut g = [Complex64::default(); 2];
                for &(c, d) in terms {
                    let (tv, tg) = plane_term(c, d, *k, x);
                    v += tv;
                    g[0] += tg[0];
                    g[1] += tg[1];
                }
                (v, g)
            }
            IncidentKind::Herglotz { density, k } => {
                let w = density.weight();
                let mut v = Complex64::default();
                let mut g = [Complex64::default(); 2];
                for (j, gj) in density.values.iter().enumerate() {
                    let th = density.angle(j);
                    let (tv, tg) = plane_term(gj * w, Point::new(th.cos(), th.sin()), *k, x);
                    v += tv;
                    g[0] += tg[0];
                    g[1] += tg[1];
                }
                (v, g)
            }
            IncidentKind::PointSource { source, k } => {
                let d = x - source;
                let rho = d.norm();
                if rho == 0.0 {
                    return Err(IncidentError::SingularPoint);
                }
                let h0 = hankel1(0, k * rho)?;
                let h1 = hankel1(1, k * rho)?;
                let v = 0.25 * I * h0;
                let dv = -0.25 * I * k * h1;
                (v, [dv * (d.x / rho), dv * (d.y / rho)])
            }
            IncidentKind::FourierBessel { order, k, center } => {
                let d = x - center;
                let r = d.norm();
                let th = d.y.atan2(d.x);
                let m = *order;
                let e = |p: i32| Complex64::from_polar(1.0, p as f64 * th);
                let v = bessel_j(m, k * r) * e(m);
                let lo = bessel_j(m - 1, k * r) * e(m - 1);
                let hi = bessel_j(m + 1, k * r) * e(m + 1);
                (v, [0.5 * k * (lo - hi), 0.5 * I * k * (lo + hi)])
            }
        };
        let a = self.amplitude;
        Ok((a * v, [a * g[0], a * g[1]]))
    }

    pub fn value(&self, x: Point) -> Result<Complex64, IncidentError> {
        Ok(self.eval(x)?.0)
    }

    /// Closed-form Laplacian `Δv = −k²v`.
    pub fn laplacian(&self, x: Point) -> Result<Complex64, IncidentError> {
        let k = self.k();
        Ok(-k * k * self.value(x)?)
    }

    /// Five-point Laplacian with one Richardson extrapolation step.
    pub fn laplacian_fd(&self, x: Point, h: f64) -> Result<Complex64, IncidentError> {
        let five = |h: f64| -> Result<Complex64, IncidentError> {
            let c = self.value(x)?;
            let s = self.value(x + Point::new(h, 0.0))?
                + self.value(x - Point::new(h, 0.0))?
                + self.value(x + Point::new(0.0, h))?
                + self.value(x - Point::new(0.0, h))?;
            Ok((s - 4.0 * c) / (h * h))
        };
        let coarse = five(h)?;
        let fine = five(0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }
}

fn plane_term(c: Complex64, d: Point, k: f64, x: Point) -> (Complex64, [Complex64; 2]) {
    let v = c * Complex64::from_polar(1.0, k * d.dot(&x));
    let ikv = I * k * v;
    (v, [ikv * d.x, ikv * d.y])
}

/// A boundary sample of the data to approximate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTarget {
    pub point: Point,
    pub value: Complex64,
    pub gradient: [Complex64; 2],
}

impl BoundaryTarget {
    pub fn sample(field: &IncidentField, points: &[Point]) -> Result<Vec<Self>, IncidentError> {
        points.iter().map(|&p| field.eval(p).map(|(value, gradient)| Self { point: p, value, gradient })).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzFit {
    pub density: HerglotzDensity,
    /// `‖Bg − t‖ / ‖t‖` in the discrete C¹ norm (value plus gradient misfit).
    pub residual: f64,
    pub singular_ratio: f64,
}

/// Fits a Herglotz density on `m` directions to boundary values and
/// gradients by ridge-regularized least squares (`λ ≥ 0`).
pub fn herglotz_fit(targets: &[BoundaryTarget], k: f64, m: usize, ridge: f64) -> Result<HerglotzFit, IncidentError> {
    check_k(k)?;
    if !(ridge >= 0.0) {
        return Err(IncidentError::InvalidParameter("ridge must be nonnegative".into()));
    }
    if m == 0 || targets.len() < 2 * m {
        return Err(IncidentError::TooFewSamples { required: 2 * m.max(1), got: targets.len() });
    }
    let rows = 3 * targets.len();
    let w = TAU / m as f64;
    let mut b = DMatrix::<Complex64>::zeros(rows, m);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    for (i, t) in targets.iter().enumerate() {
        rhs[3 * i] = t.value;
        rhs[3 * i + 1] = t.gradient[0];
        rhs[3 * i + 2] = t.gradient[1];
        for j in 0..m {
            let th = TAU * j as f64 / m as f64;
            let (v, g) = plane_term(Complex64::new(w, 0.0), Point::new(th.cos(), th.sin()), k, t.point);
            b[(3 * i, j)] = v;
            b[(3 * i + 1, j)] = g[0];
            b[(3 * i + 2, j)] = g[1];
        }
    }
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ridge == 0.0 && ratio < 1e-13 {
        return Err(IncidentError::RankDeficient { ratio });
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let uh_b = u.adjoint() * &rhs;
    let mut filtered = DVector::<Complex64>::zeros(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let f = if s > 0.0 { s / (s * s + ridge) } else { 0.0 };
        filtered[i] = uh_b[i] * f;
    }
    let g = v_t.adjoint() * filtered;
    let resid = (&b * &g - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    Ok(HerglotzFit { density: HerglotzDensity::new(g.iter().copied().collect()), residual: resid, singular_ratio: ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(n: usize, r: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    fn all_kinds() -> Vec<IncidentField> {
        vec![
            IncidentField::plane(Point::new(1.0, 2.0), 3.0).unwrap(),
            IncidentField::point_source(Point::new(-3.0, 0.3), 2.0).unwrap(),
            IncidentField::fourier_bessel(3, 2.5, Point::new(0.1, -0.2)).unwrap(),
            IncidentField::fourier_bessel(-2, 1.5, Point::zeros()).unwrap(),
            IncidentField::herglotz(HerglotzDensity::from_fn(32, |t| Complex64::new(t.cos(), (2.0 * t).sin())), 4.0).unwrap(),
            IncidentField::square_mode_cos(),
            IncidentField::square_mode_sin(),
        ]
    }

    #[test]
    fn plane_wave_at_origin() {
        let v = IncidentField::plane(Point::new(1.0, 0.0), 2.0).unwrap();
        let (val, g) = v.eval(Point::zeros()).unwrap();
        assert_eq!(val, Complex64::new(1.0, 0.0));
        assert_eq!(g, [Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn fourier_bessel_zero_is_j0() {
        let v = IncidentField::fourier_bessel(0, 2.0, Point::zeros()).unwrap();
        let x = Point::new(0.3, -0.9);
        let val = v.value(x).unwrap();
        assert!((val - bessel_j(0, 2.0 * x.norm())).norm() < 1e-15);
    }

    #[test]
    fn square_modes_closed_form() {
        let c = IncidentField::square_mode_cos();
        let s = IncidentField::square_mode_sin();
        for &(a, b) in &[(0.1, 0.7), (0.5, 0.5), (-1.3, 2.2)] {
            let x = Point::new(a, b);
            let (vc, gc) = c.eval(x).unwrap();
            let (vs, gs) = s.eval(x).unwrap();
            let (pa, pb) = (PI * a, PI * b);
            assert!((vc - pa.cos() * pb.cos()).norm() < 1e-14);
            assert!((vs - pa.sin() * pb.sin()).norm() < 1e-14);
            assert!((gc[0] + PI * pa.sin() * pb.cos()).norm() < 1e-13);
            assert!((gs[1] - PI * pa.sin() * pb.cos()).norm() < 1e-13);
        }
    }

    #[test]
    fn herglotz_constant_density_is_j0() {
        let v = IncidentField::herglotz(HerglotzDensity::from_fn(64, |_| Complex64::new(1.0, 0.0)), 5.0).unwrap();
        for &r in &[0.0, 0.5, 1.3, 2.0] {
            let x = Point::new(r * 0.6, r * 0.8);
            let val = v.value(x).unwrap();
            assert!((val - TAU * bessel_j(0, 5.0 * r)).norm() < 1e-8, "r = {r}");
        }
        assert!((HerglotzDensity::from_fn(64, |_| Complex64::default()).weights().iter().sum::<f64>() - TAU).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_centered_differences() {
        let x = Point::new(0.37, 0.61);
        for v in all_kinds() {
            let (_, g) = v.eval(x).unwrap();
            for l in 0..2 {
                let mut errs = Vec::new();
                for h in [1e-3, 5e-4] {
                    let mut e = Point::zeros();
                    e[l] = h;
                    let fd = (v.value(x + e).unwrap() - v.value(x - e).unwrap()) / (2.0 * h);
                    errs.push((fd - g[l]).norm());
                }
                assert!(errs[0] < 1e-4 * (1.0 + g[l].norm()), "{:?}", v.kind);
                // O(h²): halving h cuts the error about fourfold.
                assert!(errs[1] < 0.35 * errs[0] + 1e-9, "{:?}: {:?}", v.kind, errs);
            }
        }
    }

    #[test]
    fn helmholtz_residual_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in all_kinds() {
            let k = v.k();
            for _ in 0..1000 {
                let x = Point::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
                let val = v.value(x).unwrap();
                let res = (v.laplacian(x).unwrap() + k * k * val).norm();
                assert!(res < 1e-8 * (1.0 + val.norm()));
            }
            // The closed form agrees with the extrapolated five-point oracle.
            for _ in 0..20 {
                let x = Point::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
                let fd = v.laplacian_fd(x, 1e-2).unwrap();
                let cf = v.laplacian(x).unwrap();
                assert!((fd - cf).norm() < 1e-5 * (1.0 + cf.norm()), "{:?}", v.kind);
            }
        }
    }

    #[test]
    fn point_source_singularity_rejected() {
        let v = IncidentField::point_source(Point::new(1.0, 1.0), 2.0).unwrap();
        assert_eq!(v.eval(Point::new(1.0, 1.0)), Err(IncidentError::SingularPoint));
    }

    #[test]
    fn rigid_motion_moves_the_field() {
        let th: f64 = 0.7;
        let q = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let t = Point::new(0.3, -0.2);
        for v in all_kinds() {
            let w = v.transformed(&q, t).unwrap();
            let x = Point::new(0.4, 0.9);
            let a = v.value(x).unwrap();
            let b = w.value(q * x + t).unwrap();
            assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{:?}", v.kind);
        }
    }

    #[test]
    fn fit_within_model_class() {
        let g0 = HerglotzDensity::from_fn(8, |t| Complex64::new(1.0 + t.sin(), 0.5 * (3.0 * t).cos()));
        let v = IncidentField::herglotz(g0.clone(), 3.0).unwrap();
        let targets = BoundaryTarget::sample(&v, &circle(32, 1.0)).unwrap();
        let fit = herglotz_fit(&targets, 3.0, 8, 0.0).unwrap();
        assert!(fit.residual < 1e-8);
        for (a, b) in fit.density.values.iter().zip(&g0.values) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn fit_recovers_fourier_bessel_density() {
        let k = 3.0;
        let v = IncidentField::fourier_bessel(3, k, Point::zeros()).unwrap();
        let targets = BoundaryTarget::sample(&v, &circle(64, 1.0)).unwrap();
        let fit = herglotz_fit(&targets, k, 32, 0.0).unwrap();
        let i3 = Complex64::new(0.0, -1.0); // i³
        for (j, g) in fit.density.values.iter().enumerate() {
            let th = fit.density.angle(j);
            let exact = Complex64::from_polar(1.0, 3.0 * th) / (TAU * i3);
            assert!((g - exact).norm() < 1e-6, "j = {j}: {g} vs {exact}");
        }
    }

    #[test]
    fn fit_residual_decreases_with_directions() {
        let k = 18.0;
        let pts = circle(256, 1.0);
        let targets = [
            IncidentField::plane(Point::new(0.31, 0.95), k).unwrap(),
            IncidentField::fourier_bessel(3, k, Point::zeros()).unwrap(),
            IncidentField::herglotz(HerglotzDensity::from_fn(24, |t| Complex64::new(t.cos(), 1.0)), k).unwrap(),
        ];
        for v in &targets {
            let data = BoundaryTarget::sample(v, &pts).unwrap();
            let res: Vec<f64> = [8, 16, 32, 64].iter().map(|&m| herglotz_fit(&data, k, m, 1e-12).unwrap().residual).collect();
            for w in res.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}: {:?}", v.kind, res);
            }
        }
    }

    #[test]
    fn rank_deficiency_needs_ridge() {
        // Far more directions than the boundary data can resolve at small k.
        let v = IncidentField::plane(Point::new(1.0, 0.0), 0.5).unwrap();
        let targets = BoundaryTarget::sample(&v, &circle(128, 0.2)).unwrap();
        assert!(matches!(herglotz_fit(&targets, 0.5, 64, 0.0), Err(IncidentError::RankDeficient { .. })));
        assert!(herglotz_fit(&targets, 0.5, 64, 1e-10).is_ok());
        assert!(matches!(herglotz_fit(&targets[..10], 0.5, 64, 1e-10), Err(IncidentError::TooFewSamples { .. })));
    }

    #[test]
    fn density_csv_round_trip() {
        let d = HerglotzDensity::from_fn(16, |t| Complex64::new(t.sin(), -t));
        let dir = std::env::temp_dir().join(format!("anisoscat-density-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.csv");
        d.write_csv(&path).unwrap();
        let back = HerglotzDensity::read_csv(&path).unwrap();
        assert_eq!(back, d);
        std::fs::remove_dir_all(&dir).ok();
    }
}
