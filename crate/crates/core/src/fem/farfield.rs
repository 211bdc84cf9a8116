//! Far-field pattern from the scattered field on the truncation circle.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

use super::mesh::Mesh;
use crate::error::FemError;
use crate::specialfun::hankel1;

#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    /// Uniform angles `θ_j = 2πj/N`.
    pub theta: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Fourier coefficients `c_m` of `w` on the ring, `|m| ≤ M`.
    pub coefficients: Vec<(i32, Complex64)>,
    pub l2_norm: f64,
    pub warnings: Vec<String>,
}

/// `‖f‖_{L²(S¹)}` of uniform samples by the trapezoid rule.
pub fn l2_norm(values: &[Complex64]) -> f64 {
    (TAU / values.len() as f64 * values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖a − b‖_{L²(S¹)}` of two sample vectors on the same grid.
pub fn l2_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(&diff)
}

/// Trapezoid Fourier coefficients `c_m = (1/N) Σ_j w_j e^{−imθ_j}` on the ring,
/// propagated by `γ_m = √(2/(πk)) e^{−i(mπ/2 + π/4)} / H_m⁽¹⁾(kR)`. Angles
/// are measured about the mesh center.
pub fn far_field(mesh: &Mesh, w: &[Complex64], k: f64, m_max: usize, n_theta: usize) -> Result<FarField, FemError> {
    let n = mesh.ring.len();
    let mut warnings = Vec::new();
    if n < 8 * m_max {
        warnings.push(format!("ring has {n} vertices, fewer than 8M = {}; far field may alias", 8 * m_max));
    }
    let pref = (2.0 / (PI * k)).sqrt();
    let mut coefficients = Vec::with_capacity(2 * m_max + 1);
    let mut gammas = Vec::with_capacity(2 * m_max + 1);
    for m in -(m_max as i32)..=(m_max as i32) {
        let c: Complex64 =
            mesh.ring.iter().zip(&mesh.ring_angles).map(|(&j, &th)| w[j] * Complex64::from_polar(1.0, -(m as f64) * th)).sum::<Complex64>()
                / n as f64;
        let gamma = pref * Complex64::from_polar(1.0, -(m as f64 * FRAC_PI_2 + FRAC_PI_4)) / hankel1(m, k * mesh.radius)?;
        coefficients.push((m, c));
        gammas.push(gamma);
    }
    let theta: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
    let values: Vec<Complex64> = theta
        .iter()
        .map(|&th| coefficients.iter().zip(&gammas).map(|(&(m, c), g)| c * g * Complex64::from_polar(1.0, m as f64 * th)).sum())
        .collect();
    let l2 = l2_norm(&values);
    Ok(FarField { theta, values, coefficients, l2_norm: l2, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{generate_mesh, MeshOptions};
    use crate::Point;

    #[test]
    fn zero_field_has_zero_far_field() {
        let mesh = generate_mesh(Point::zeros(), 1.0, None, 0.2, MeshOptions::default()).unwrap();
        let w = vec![Complex64::default(); mesh.n_vertices()];
        let ff = far_field(&mesh, &w, 2.0, 10, 64).unwrap();
        assert_eq!(ff.l2_norm, 0.0);
        assert!(!ff.warnings.is_empty());
    }

    #[test]
    fn outgoing_mode_has_known_pattern() {
        // w = H_2(kr) e^{2iθ} has far field √(2/(πk)) e^{−i(π + π/4)} e^{2iθ}.
        let k = 3.0;
        let mesh = generate_mesh(Point::zeros(), 1.5, None, 0.02, MeshOptions::default()).unwrap();
        let w: Vec<Complex64> =
            mesh.vertices.iter().map(|p| hankel1(2, k * p.norm().max(1e-3)).unwrap() * Complex64::from_polar(1.0, 2.0 * p.y.atan2(p.x))).collect();
        let ff = far_field(&mesh, &w, k, 16, 90).unwrap();
        for (th, u) in ff.theta.iter().zip(&ff.values) {
            let expect = (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -(PI + FRAC_PI_4) + 2.0 * th);
            assert!((u - expect).norm() < 1e-10);
        }
        assert!((ff.l2_norm - (2.0 / (PI * k) * TAU).sqrt()).abs() < 1e-10);
    }
}
