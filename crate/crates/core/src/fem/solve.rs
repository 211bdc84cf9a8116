//! Direct solve of `(K − B)x = b`: sparse LU of `K` with the low-rank DtN
//! term folded in by the Woodbury identity
//! `(K − LDRᵀ)⁻¹ = K⁻¹ + K⁻¹L(D⁻¹ − RᵀK⁻¹L)⁻¹RᵀK⁻¹`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::assemble::LinearSystem;
use super::sparse::SparseLu;
use crate::error::FemError;

/// Relative residual required of every solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// `‖Sx − b‖ / ‖b‖`.
    pub residual: f64,
    pub refinements: usize,
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A factored system, reusable for several right-hand sides.
pub struct Solver<'a> {
    system: &'a LinearSystem,
    lu: SparseLu,
    /// `Z = K⁻¹L`, one column per DtN mode.
    z: Vec<Vec<Complex64>>,
    capacitance: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> Solver<'a> {
    pub fn new(system: &'a LinearSystem) -> Result<Self, FemError> {
        let lu = SparseLu::factor(&system.matrix)?;
        let n = system.n();
        let dtn = &system.dtn;
        let cols: Vec<Vec<Complex64>> = dtn
            .e
            .iter()
            .map(|em| {
                let mut c = vec![Complex64::default(); n];
                for (&i, e) in dtn.ring.iter().zip(em) {
                    c[i] = e.conj();
                }
                c
            })
            .collect();
        let z = lu.solve_many(&cols);
        if z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FemError::Singular("non-finite values in K⁻¹L; k may sit on a resonance of the truncated problem".into()));
        }
        let p = dtn.rank();
        let mut cap = DMatrix::<Complex64>::zeros(p, p);
        for a in 0..p {
            for (b, zb) in z.iter().enumerate() {
                let rz: Complex64 = dtn.ring.iter().zip(&dtn.e[a]).map(|(&j, e)| e * zb[j]).sum();
                cap[(a, b)] = -rz;
            }
            cap[(a, a)] += 1.0 / dtn.beta[a];
        }
        let capacitance = cap.lu();
        Ok(Self { system, lu, z, capacitance })
    }

    fn woodbury(&self, b: &[Complex64]) -> Result<Vec<Complex64>, FemError> {
        let dtn = &self.system.dtn;
        let mut y = self.lu.solve(b);
        let p = dtn.rank();
        let ry = DVector::<Complex64>::from_iterator(p, dtn.e.iter().map(|em| dtn.ring.iter().zip(em).map(|(&j, e)| e * y[j]).sum::<Complex64>()));
        let s = self.capacitance.solve(&ry).ok_or_else(|| FemError::Singular("capacitance matrix of the DtN update is singular".into()))?;
        for (zc, sc) in self.z.iter().zip(s.iter()) {
            for (yi, zi) in y.iter_mut().zip(zc) {
                *yi += zi * sc;
            }
        }
        Ok(y)
    }

    /// Solves `Sx = b` with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[Complex64]) -> Result<(Vec<Complex64>, SolveReport), FemError> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok((vec![Complex64::default(); b.len()], SolveReport { residual: 0.0, refinements: 0 }));
        }
        let mut x = self.woodbury(b)?;
        let residual_of = |x: &[Complex64]| -> Vec<Complex64> {
            let sx = self.system.apply(x);
            b.iter().zip(sx).map(|(bi, si)| bi - si).collect()
        };
        let mut r = residual_of(&x);
        let mut rel = norm(&r) / bn;
        let mut steps = 0;
        while steps < MAX_REFINEMENTS && rel > 1e-14 && rel.is_finite() {
            let dx = self.woodbury(&r)?;
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
            r = residual_of(&x);
            let next = norm(&r) / bn;
            steps += 1;
            if !(next < 0.5 * rel) {
                rel = next;
                break;
            }
            rel = next;
        }
        if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(FemError::Singular(format!("non-finite solution (|x|/|b| = {:.3e})", norm(&x) / bn)));
        }
        if rel >= RESIDUAL_TOLERANCE {
            return Err(FemError::Residual { residual: rel });
        }
        Ok((x, SolveReport { residual: rel, refinements: steps }))
    }
}

/// Factors and solves the assembled system once.
pub fn solve(system: &LinearSystem) -> Result<(Vec<Complex64>, SolveReport), FemError> {
    Solver::new(system)?.solve(&system.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble::{assemble, assemble_volume, ring_mass};
    use crate::fem::mesh::{generate_mesh, MeshOptions};
    use crate::fem::sparse::CscMatrix;
    use crate::incident::IncidentField;
    use crate::media::square_medium;
    use crate::specialfun::bessel_j;
    use crate::Point;

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let mesh = generate_mesh(Point::new(0.5, 0.5), 1.2, Some(&crate::media::Domain::unit_square()), 0.1, MeshOptions::default()).unwrap();
        let med = square_medium(2.0).unwrap();
        let v = IncidentField::plane(Point::new(1.0, 0.0), 3.0).unwrap();
        let mut sys = assemble(Some(&med), &v, 3.0, 20, &mesh).unwrap();
        sys.rhs.iter_mut().for_each(|z| *z = Complex64::default());
        let (x, rep) = solve(&sys).unwrap();
        assert!(x.iter().all(|z| *z == Complex64::default()));
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn residual_contract_holds() {
        let mesh = generate_mesh(Point::new(0.5, 0.5), 1.2, Some(&crate::media::Domain::unit_square()), 0.05, MeshOptions::default()).unwrap();
        let med = square_medium(2.0).unwrap();
        let v = IncidentField::plane(Point::new(0.6, 0.8), 4.0).unwrap();
        let sys = assemble(Some(&med), &v, 4.0, 20, &mesh).unwrap();
        let (x, rep) = solve(&sys).unwrap();
        assert!(rep.residual < RESIDUAL_TOLERANCE);
        let r: Vec<Complex64> = sys.apply(&x).iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
        assert!(norm(&r) / norm(&sys.rhs) < RESIDUAL_TOLERANCE);
    }

    // Penalized Dirichlet data w = J₀(kR) on the ring of a plain disk; the
    // exact solution is J₀(k|x|).
    fn manufactured_error(h: f64) -> f64 {
        let k = 2.0;
        let r = 1.0;
        let mesh = generate_mesh(Point::zeros(), r, None, h, MeshOptions::default()).unwrap();
        let (kmat, _) = assemble_volume(&mesh, None, None, k).unwrap();
        let penalty = 1e8;
        let bm = ring_mass(&mesh);
        let mut trips = Vec::new();
        for j in 0..kmat.ncols {
            for p in kmat.col_ptr[j]..kmat.col_ptr[j + 1] {
                trips.push((kmat.row_idx[p], j, kmat.values[p]));
            }
            for p in bm.col_ptr[j]..bm.col_ptr[j + 1] {
                trips.push((bm.row_idx[p], j, bm.values[p] * penalty));
            }
        }
        let s = CscMatrix::from_triplets(kmat.nrows, kmat.ncols, trips);
        let g = vec![Complex64::new(bessel_j(0, k * r), 0.0); mesh.n_vertices()];
        let rhs: Vec<Complex64> = bm.matvec(&g).iter().map(|z| z * penalty).collect();
        let x = crate::fem::sparse::SparseLu::factor(&s).unwrap().solve(&rhs);
        // Discrete L² error with the lumped vertex mass.
        let mut lumped = vec![0.0; mesh.n_vertices()];
        for t in 0..mesh.triangles.len() {
            let a = mesh.area(t) / 3.0;
            for &v in &mesh.triangles[t] {
                lumped[v] += a;
            }
        }
        mesh.vertices.iter().enumerate().map(|(i, p)| lumped[i] * (x[i] - bessel_j(0, k * p.norm())).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn manufactured_solution_converges_quadratically() {
        let e1 = manufactured_error(0.1);
        let e2 = manufactured_error(0.05);
        let rate = (e1 / e2).log2();
        assert!(rate > 1.7, "errors {e1:.3e} {e2:.3e}, rate {rate:.2}");
    }
}
