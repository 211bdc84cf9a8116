//! Galerkin assembly of the scattered-field problem
//! `∫ A∇w·∇φ − k²nwφ − ∫_Γ (Λw)φ = −∫_Ω (A−I)∇v·∇φ + k²∫_Ω (n−1)vφ`
//! on P1 elements, with `Λ` the Fourier–Hankel Dirichlet-to-Neumann map on
//! the truncation circle `Γ`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::Mesh;
use super::quadrature::{seven_point, three_point, QuadPoint};
use super::sparse::CscMatrix;
use crate::error::FemError;
use crate::incident::IncidentField;
use crate::media::{sym_eigenvalues, MediumSpec};
use crate::specialfun::{hankel1, hankel1_prime};
use crate::{Mat2, Point};

/// Smallest admissible truncation: `ceil(kR) + 8`.
pub fn required_truncation(k: f64, radius: f64) -> usize {
    (k * radius).ceil() as usize + 8
}

/// Default truncation: `ceil(kR) + 12`.
pub fn default_truncation(k: f64, radius: f64) -> usize {
    (k * radius).ceil() as usize + 12
}

/// `λ_m = k H_m⁽¹⁾'(kR) / H_m⁽¹⁾(kR)` for `|m| ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnOperator {
    pub m_max: usize,
    pub k: f64,
    pub radius: f64,
    pub lambda: Vec<(i32, Complex64)>,
}

impl DtnOperator {
    pub fn new(k: f64, radius: f64, m_max: usize) -> Result<Self, FemError> {
        let required = required_truncation(k, radius);
        if m_max < required {
            return Err(FemError::Truncation { m: m_max, required });
        }
        let mut lambda = Vec::with_capacity(2 * m_max + 1);
        for m in -(m_max as i32)..=(m_max as i32) {
            let l = k * hankel1_prime(m, k * radius)? / hankel1(m, k * radius)?;
            if !(l.im > 0.0) {
                return Err(FemError::DtnSign { m, value: l.im });
            }
            lambda.push((m, l));
        }
        Ok(Self { m_max, k, radius, lambda })
    }
}

/// The DtN boundary form `B = Σ_m β_m ē_m e_mᵀ` restricted to ring unknowns,
/// with `(e_m)_j = Δ sinc²(mΔ/2) e^{−imθ_j}` and `β_m = Rλ_m/(2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankDtn {
    pub ring: Vec<usize>,
    pub modes: Vec<i32>,
    pub e: Vec<Vec<Complex64>>,
    pub beta: Vec<Complex64>,
}

impl LowRankDtn {
    pub fn new(mesh: &Mesh, dtn: &DtnOperator) -> Self {
        let n = mesh.ring.len();
        let delta = TAU / n as f64;
        let mut modes = Vec::new();
        let mut e = Vec::new();
        let mut beta = Vec::new();
        for &(m, l) in &dtn.lambda {
            let x = 0.5 * m as f64 * delta;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            let w = delta * sinc * sinc;
            e.push(mesh.ring_angles.iter().map(|&th| Complex64::from_polar(w, -(m as f64) * th)).collect());
            beta.push(dtn.radius * l / TAU);
            modes.push(m);
        }
        Self { ring: mesh.ring.clone(), modes, e, beta }
    }

    pub fn rank(&self) -> usize {
        self.modes.len()
    }

    /// `B x` on the full unknown vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); x.len()];
        for (em, bm) in self.e.iter().zip(&self.beta) {
            let s: Complex64 = self.ring.iter().zip(em).map(|(&j, e)| e * x[j]).sum::<Complex64>() * bm;
            for (&i, e) in self.ring.iter().zip(em) {
                y[i] += e.conj() * s;
            }
        }
        y
    }

    /// Entry `B_{ab}` for ring positions `a`, `b`.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.e.iter().zip(&self.beta).map(|(em, bm)| bm * em[a].conj() * em[b]).sum()
    }
}

/// `S = K − B` with sparse `K` (stiffness minus `k²` mass) and low-rank `B`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CscMatrix,
    pub dtn: LowRankDtn,
    pub rhs: Vec<Complex64>,
    pub k: f64,
}

impl LinearSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.matrix.matvec(x);
        for (yi, bi) in y.iter_mut().zip(self.dtn.apply(x)) {
            *yi -= bi;
        }
        y
    }
}

/// P1 element geometry: area and the gradients of the barycentric coordinates.
pub fn p1_gradients(p: &[Point; 3]) -> (f64, [Point; 3]) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.x * e2.y - e1.y * e2.x;
    let g1 = Point::new(e2.y, -e2.x) / det;
    let g2 = Point::new(-e1.y, e1.x) / det;
    (0.5 * det, [-g1 - g2, g1, g2])
}

struct ElementData {
    nodes: [usize; 3],
    k: [[Complex64; 3]; 3],
    f: [Complex64; 3],
}

fn element(
    mesh: &Mesh,
    t: usize,
    medium: Option<&MediumSpec>,
    v: Option<&IncidentField>,
    k: f64,
    rules: &(Vec<QuadPoint>, Vec<QuadPoint>),
) -> Result<ElementData, FemError> {
    let p = mesh.corners(t);
    let (area, g) = p1_gradients(&p);
    let mut ke = [[Complex64::default(); 3]; 3];
    let mut fe = [Complex64::default(); 3];
    let inside = medium.is_some() && mesh.inside[t];
    if !inside {
        // A = I and n = 1; the edge-midpoint rule is exact for P1 mass.
        for (lam, w) in &rules.0 {
            let wa = w * area;
            for i in 0..3 {
                for j in 0..3 {
                    ke[i][j] += Complex64::new(wa * (g[i].dot(&g[j]) - k * k * lam[i] * lam[j]), 0.0);
                }
            }
        }
        return Ok(ElementData { nodes: mesh.triangles[t], k: ke, f: fe });
    }
    let medium = medium.unwrap();
    let rule = &rules.1;
    for (lam, w) in rule {
        let x = p[0] * lam[0] + p[1] * lam[1] + p[2] * lam[2];
        let (a, n) = medium.interior(x)?;
        check_elliptic(&a, medium.c0, x)?;
        let wa = w * area;
        for i in 0..3 {
            let ag = a * g[i];
            for j in 0..3 {
                ke[i][j] += Complex64::new(wa * (ag.dot(&g[j]) - k * k * n * lam[i] * lam[j]), 0.0);
            }
        }
        if let Some(v) = v {
            let (val, grad) = v.eval(x)?;
            let c = a - Mat2::identity();
            for i in 0..3 {
                let cg = c * g[i];
                let flux = grad[0] * cg.x + grad[1] * cg.y;
                fe[i] += wa * (-flux + k * k * (n - 1.0) * val * lam[i]);
            }
        }
    }
    Ok(ElementData { nodes: mesh.triangles[t], k: ke, f: fe })
}

fn check_elliptic(a: &Mat2, c0: f64, x: Point) -> Result<(), FemError> {
    let ev = sym_eigenvalues(a);
    let slack = 1e-9;
    let ok = ev[0] > 0.0 && ev[0].is_finite() && ev[1].is_finite() && ev[0] * c0 >= 1.0 - slack && ev[1] <= c0 * (1.0 + slack);
    if ok && (a[(0, 1)] - a[(1, 0)]).abs() <= 1e-12 * a.norm() {
        Ok(())
    } else {
        Err(FemError::Ellipticity { point: [x.x, x.y], eigenvalues: ev })
    }
}

/// Sparse volume matrix `∫ A∇w·∇φ − k²nwφ` and the contrast source.
pub fn assemble_volume(mesh: &Mesh, medium: Option<&MediumSpec>, v: Option<&IncidentField>, k: f64) -> Result<(CscMatrix, Vec<Complex64>), FemError> {
    let rules = (three_point(), seven_point());
    let elems: Vec<ElementData> =
        (0..mesh.triangles.len()).into_par_iter().map(|t| element(mesh, t, medium, v, k, &rules)).collect::<Result<_, _>>()?;
    let n = mesh.n_vertices();
    let mut trips = Vec::with_capacity(9 * elems.len());
    let mut rhs = vec![Complex64::default(); n];
    for e in &elems {
        for i in 0..3 {
            rhs[e.nodes[i]] += e.f[i];
            for j in 0..3 {
                trips.push((e.nodes[i], e.nodes[j], e.k[i][j]));
            }
        }
    }
    Ok((CscMatrix::from_triplets(n, n, trips), rhs))
}

/// Full system for the scattered field of `v` by `medium` at wave number `k`
/// with DtN truncation `m_max`.
pub fn assemble(medium: Option<&MediumSpec>, v: &IncidentField, k: f64, m_max: usize, mesh: &Mesh) -> Result<LinearSystem, FemError> {
    let dtn = DtnOperator::new(k, mesh.radius, m_max)?;
    let (matrix, rhs) = assemble_volume(mesh, medium, Some(v), k)?;
    Ok(LinearSystem { matrix, dtn: LowRankDtn::new(mesh, &dtn), rhs, k })
}

/// P1 mass matrix of the boundary ring, `∫_Γ φ_i φ_j ds`.
pub fn ring_mass(mesh: &Mesh) -> CscMatrix {
    let n = mesh.ring.len();
    let mut trips = Vec::with_capacity(4 * n);
    for i in 0..n {
        let (a, b) = (mesh.ring[i], mesh.ring[(i + 1) % n]);
        let len = (mesh.vertices[b] - mesh.vertices[a]).norm();
        let d = Complex64::new(len / 3.0, 0.0);
        let o = Complex64::new(len / 6.0, 0.0);
        trips.extend([(a, a, d), (b, b, d), (a, b, o), (b, a, o)]);
    }
    let nv = mesh.n_vertices();
    CscMatrix::from_triplets(nv, nv, trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{generate_mesh, MeshOptions};
    use crate::media::{square_medium, MediumSpec};
    use std::sync::Arc;

    fn two_triangle_mesh() -> Mesh {
        Mesh {
            vertices: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            ring: vec![],
            ring_angles: vec![],
            center: Point::new(0.5, 0.5),
            radius: 1.0,
            h: 1.0,
            interface_conforming: true,
            inside: vec![false, false],
            interface_edges: vec![],
        }
    }

    #[test]
    fn patch_test_on_two_triangles() {
        let mesh = two_triangle_mesh();
        let (k, _) = assemble_volume(&mesh, None, None, 0.0).unwrap();
        // Sum of the two right-triangle stiffness matrices by hand; the
        // couplings along the diagonal edge (0, 2) cancel.
        let expect = [[1.0, -0.5, 0.0, -0.5], [-0.5, 1.0, -0.5, 0.0], [0.0, -0.5, 1.0, -0.5], [-0.5, 0.0, -0.5, 1.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!((k.get(i, j) - Complex64::new(e, 0.0)).norm() < 1e-15, "({i}, {j})");
            }
        }
        let ones = vec![Complex64::new(1.0, 0.0); 4];
        assert!(k.matvec(&ones).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn contrast_free_rhs_is_zero() {
        let mesh = generate_mesh(Point::new(0.5, 0.5), 1.2, Some(&crate::media::Domain::unit_square()), 0.1, MeshOptions::default()).unwrap();
        let free = MediumSpec {
            domain: crate::media::Domain::unit_square(),
            field: Arc::new(crate::media::ConstantField { a: Mat2::identity(), n: 1.0 }),
            label: "free".into(),
            c0: 1.0,
        };
        let v = IncidentField::plane(Point::new(1.0, 0.0), 3.0).unwrap();
        let sys = assemble(Some(&free), &v, 3.0, 20, &mesh).unwrap();
        assert!(sys.rhs.iter().all(|z| *z == Complex64::default()));
    }

    #[test]
    fn system_is_complex_symmetric() {
        let mesh = generate_mesh(Point::new(0.5, 0.5), 1.2, Some(&crate::media::Domain::unit_square()), 0.1, MeshOptions::default()).unwrap();
        let med = square_medium(2.0).unwrap();
        let v = IncidentField::plane(Point::new(1.0, 0.0), 3.0).unwrap();
        let sys = assemble(Some(&med), &v, 3.0, 20, &mesh).unwrap();
        assert!(sys.matrix.asymmetry() < 1e-12);
        let n = sys.dtn.ring.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for a in (0..n).step_by(7) {
            for b in (0..n).step_by(5) {
                worst = worst.max((sys.dtn.entry(a, b) - sys.dtn.entry(b, a)).norm());
                scale = scale.max(sys.dtn.entry(a, b).norm());
            }
        }
        assert!(worst < 1e-12 * scale);
        // Not Hermitian: the DtN part carries a nonzero imaginary diagonal.
        assert!(sys.dtn.entry(0, 0).im.abs() > 1e-6);
    }

    #[test]
    fn dtn_has_outgoing_sign_and_truncation_floor() {
        let d = DtnOperator::new(2.0, 1.6, 24).unwrap();
        assert!(d.lambda.iter().all(|(_, l)| l.im > 0.0));
        assert_eq!(DtnOperator::new(2.0, 1.6, 10), Err(FemError::Truncation { m: 10, required: 12 }));
    }

    #[test]
    fn ellipticity_violation_aborts() {
        let mesh = generate_mesh(Point::new(0.5, 0.5), 1.2, Some(&crate::media::Domain::unit_square()), 0.2, MeshOptions::default()).unwrap();
        let bad = MediumSpec {
            domain: crate::media::Domain::unit_square(),
            field: Arc::new(crate::media::ConstantField { a: Mat2::new(1.0, 0.0, 0.0, -1.0), n: 1.0 }),
            label: "indefinite".into(),
            c0: 2.0,
        };
        let v = IncidentField::plane(Point::new(1.0, 0.0), 1.0).unwrap();
        assert!(matches!(assemble(Some(&bad), &v, 1.0, 10, &mesh), Err(FemError::Ellipticity { .. })));
    }
}
