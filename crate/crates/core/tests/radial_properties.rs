use std::f64::consts::PI;
use std::sync::Arc;

use anisoscat::radial::{find_te, radial_sweep, scattering_coeff, RadialProfile};

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    while b - a > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn check_coincidence(profile: &RadialProfile) {
    let n = 1000;
    let ks: Vec<f64> = (1..=n).map(|i| 10.0 * i as f64 / n as f64).collect();
    let cell = ks[1] - ks[0];
    for m in 0..3 {
        let rows = radial_sweep(profile, m, &ks).unwrap();
        let abs: Vec<f64> = rows.iter().map(|r| r.c.norm()).collect();
        let mut zeros = Vec::new();
        for i in 1..n - 1 {
            if abs[i] <= abs[i - 1] && abs[i] <= abs[i + 1] {
                let (k, v) = golden_min(|k| scattering_coeff(profile, m, k).unwrap().norm(), ks[i - 1], ks[i + 1]);
                if v < 1e-6 {
                    zeros.push(k);
                }
            }
        }
        let roots: Vec<f64> = find_te(profile, m, ks[0], ks[n - 1], n).unwrap().roots.iter().map(|r| r.k).collect();
        assert_eq!(zeros.len(), roots.len(), "m = {m}: minima {zeros:?} roots {roots:?}");
        for (z, r) in zeros.iter().zip(&roots) {
            assert!((z - r).abs() <= cell, "m = {m}: {z} vs {r}");
        }
    }
}

#[test]
fn minima_of_c_coincide_with_determinant_roots() {
    check_coincidence(&RadialProfile::constant(1.0, 4.0, 1.0).unwrap());
    check_coincidence(&RadialProfile::new(Arc::new(|_| 1.0), Arc::new(|r: f64| 2.0 + (PI * r).cos()), 1.0).unwrap());
}
