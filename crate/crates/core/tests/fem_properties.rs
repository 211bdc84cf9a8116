use anisoscat::fem::{generate_mesh, l2_distance, l2_norm, solve_on_mesh, solve_scattering, truncation_circle, FemParams, MeshOptions};
use anisoscat::incident::IncidentField;
use anisoscat::media::{constant_medium, Domain};
use anisoscat::radial::{mie_far_field, scattering_coeff, RadialProfile};
use anisoscat::{Mat2, Point};

fn rotate(p: Point, angle: f64, about: Point) -> Point {
    let (s, c) = angle.sin_cos();
    let d = p - about;
    about + Point::new(c * d.x - s * d.y, s * d.x + c * d.y)
}

#[test]
fn far_field_norm_is_rotation_invariant() {
    let alpha = 0.4;
    let center = Point::new(0.5, 0.5);
    let square = Domain::unit_square();
    let turned = Domain::polygon(square.vertices().iter().map(|&p| rotate(p, alpha, center)).collect()).unwrap();
    let d = Point::new(0.6, 0.8);
    let k = 3.0;
    let norm = |domain: Domain, dir: Point| {
        let medium = constant_medium(domain, Mat2::identity() * 2.0, 1.5, "square").unwrap();
        let v = IncidentField::plane(dir, k).unwrap();
        // Same truncation circle for both orientations.
        let mut params = FemParams::new(0.02);
        params.rc = Some(1.6 * 0.5 * 2f64.sqrt());
        solve_scattering(&medium, &v, k, &params).unwrap().far_field.l2_norm
    };
    let a = norm(square, d);
    let b = norm(turned, rotate(d, alpha, Point::zeros()));
    assert!((a - b).abs() / a <= 1e-3, "{a} vs {b}");
}

fn mie_error(h: f64) -> f64 {
    let k = 2.0;
    let medium = constant_medium(Domain::disk(Point::zeros(), 1.0), Mat2::identity(), 4.0, "disk").unwrap();
    let mut params = FemParams::new(h);
    params.rc = Some(1.6);
    params.m = Some(24);
    let sol = solve_scattering(&medium, &IncidentField::plane(Point::new(1.0, 0.0), k).unwrap(), k, &params).unwrap();
    let profile = RadialProfile::constant(1.0, 4.0, 1.0).unwrap();
    let coeffs: Vec<_> = (-12..=12).map(|m| (m, scattering_coeff(&profile, m, k).unwrap())).collect();
    let exact: Vec<_> = sol.far_field.theta.iter().map(|&t| mie_far_field(&coeffs, k, 0.0, t)).collect();
    l2_distance(&sol.far_field.values, &exact)
}

#[test]
fn mie_error_drops_threefold_per_halving() {
    let e: Vec<f64> = [0.08, 0.04, 0.02].iter().map(|&h| mie_error(h)).collect();
    assert!(e[0] >= 3.0 * e[1] && e[1] >= 3.0 * e[2], "{e:?}");
}

#[test]
fn dtn_truncation_m_and_m_plus_8_agree() {
    let k = 2.0;
    let medium = constant_medium(Domain::disk(Point::zeros(), 1.0), Mat2::identity(), 4.0, "disk").unwrap();
    let v = IncidentField::plane(Point::new(0.0, 1.0), k).unwrap();
    let mut params = FemParams::new(0.04);
    params.rc = Some(1.6);
    let m0 = (k * 1.6f64).ceil() as usize + 8;
    let (c, rc) = truncation_circle(&medium, &params);
    let mesh = generate_mesh(c, rc, Some(&medium.domain), params.h, MeshOptions { min_ring: 8 * (m0 + 8), ..MeshOptions::default() }).unwrap();
    let ff = |m: usize| {
        let mut p = params;
        p.m = Some(m);
        solve_on_mesh(mesh.clone(), &medium, &v, k, &p).unwrap().far_field.values
    };
    let (a, b) = (ff(m0), ff(m0 + 8));
    let rel = l2_distance(&a, &b) / l2_norm(&b);
    assert!(rel <= 1e-6, "relative difference {rel:.3e}");
}
