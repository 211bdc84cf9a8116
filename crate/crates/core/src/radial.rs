//! Separation of variables for stratified media `A = a(r)I`, `n = n(r)` on a
//! disk of radius `R`.
//!
//! Mode `m` of `∇·A∇u + k²nu = 0` reduces to
//! `(r a u')' = (a m²/r − k² n r) u`, integrated as a first-order system in
//! `(u, q = r a u')`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::RadialError;
use crate::media::RadialFn;
use crate::specialfun::{bessel_j, bessel_j_prime, hankel1, hankel1_prime};

/// Default number of uniform RK4 steps over `[0, R]`.
pub const DEFAULT_STEPS: usize = 4096;

/// Start radius of the integration, relative to `R`.
const START_FRACTION: f64 = 1e-6;

#[derive(Clone)]
pub struct RadialProfile {
    pub a: RadialFn,
    pub n: RadialFn,
    pub radius: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialProfile(R = {})", self.radius)
    }
}

impl RadialProfile {
    pub fn new(a: RadialFn, n: RadialFn, radius: f64) -> Result<Self, RadialError> {
        if !(radius > 0.0) {
            return Err(RadialError::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        for i in 0..=256 {
            let r = radius * i as f64 / 256.0;
            let (av, nv) = (a(r), n(r));
            if !(av > 0.0 && nv > 0.0 && av.is_finite() && nv.is_finite()) {
                return Err(RadialError::InvalidParameter(format!("a({r}) = {av}, n({r}) = {nv} must be positive")));
            }
        }
        Ok(Self { a, n, radius })
    }

    pub fn constant(a: f64, n: f64, radius: f64) -> Result<Self, RadialError> {
        Self::new(Arc::new(move |_| a), Arc::new(move |_| n), radius)
    }

    /// Largest `max(a, 1/a)` on a sampling grid.
    pub fn c0(&self) -> f64 {
        (0..=1024).map(|i| (self.a)(self.radius * i as f64 / 1024.0)).fold(1.0, |c: f64, a| c.max(a).max(1.0 / a))
    }
}

/// Boundary trace `(u_m(R), a(R) u_m'(R))` of the regular solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTrace {
    pub m: i32,
    pub k: f64,
    pub u_r: f64,
    pub flux_r: f64,
}

fn rk4<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(t + h, add(y, k3, h));
    [y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]), y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])]
}

/// [`integrate_mode_steps`] with [`DEFAULT_STEPS`].
pub fn integrate_mode(profile: &RadialProfile, m: i32, k: f64) -> ModeTrace {
    integrate_mode_steps(profile, m, k, DEFAULT_STEPS)
}

/// Integrates the regular mode-`m` solution from `r₀ = 10⁻⁶R` with seed
/// `u = (r/R)^m` by classical RK4.
///
/// Near the origin the `1/r` coefficient makes a uniform step in `r` lose
/// its fourth order, so the inner segment `[r₀, r_s]` is integrated in
/// `t = ln r` (where the system is `u_t = q/a`, `q_t = (a m² − k²nr²)u`) and
/// the rest with the uniform step `R/steps`. Both step counts scale with
/// `steps`, so the trace converges at order 4.
pub fn integrate_mode_steps(profile: &RadialProfile, m: i32, k: f64, steps: usize) -> ModeTrace {
    let m_abs = m.unsigned_abs() as f64;
    let big_r = profile.radius;
    let a = &profile.a;
    let n = &profile.n;
    let h = big_r / steps as f64;
    let j_s = ((8.0 * m_abs.max(1.0) * steps as f64 / 4096.0).round() as usize).clamp(1, steps / 4);
    let r_s = j_s as f64 * h;
    let r0 = START_FRACTION * big_r;

    let seed = (r0 / big_r).powf(m_abs);
    let mut y = [seed, a(r0) * m_abs * seed];

    let log_rhs = |t: f64, y: [f64; 2]| {
        let r = t.exp();
        let av = a(r);
        [y[1] / av, (av * m_abs * m_abs - k * k * n(r) * r * r) * y[0]]
    };
    let n_log = ((steps / 32).max(1)) * (1 + m_abs as usize);
    let (t0, t1) = (r0.ln(), r_s.ln());
    let dt = (t1 - t0) / n_log as f64;
    for i in 0..n_log {
        y = rk4(&log_rhs, t0 + i as f64 * dt, y, dt);
    }

    let rhs = |r: f64, y: [f64; 2]| {
        let av = a(r);
        [y[1] / (r * av), (av * m_abs * m_abs / r - k * k * n(r) * r) * y[0]]
    };
    for j in j_s..steps {
        y = rk4(&rhs, j as f64 * h, y, h);
    }
    ModeTrace { m, k, u_r: y[0], flux_r: y[1] / big_r }
}

/// `d_m(k) = u_m(R) k J_m'(kR) − a(R)u_m'(R) J_m(kR)`.
pub fn te_determinant(profile: &RadialProfile, m: i32, k: f64) -> f64 {
    determinant_from_trace(&integrate_mode(profile, m, k), profile.radius)
}

pub fn determinant_from_trace(t: &ModeTrace, radius: f64) -> f64 {
    let kr = t.k * radius;
    t.u_r * t.k * bessel_j_prime(t.m, kr) - t.flux_r * bessel_j(t.m, kr)
}

/// `(|u_R| k + |flux_R|)(|J| + |J'|)`, bounding both determinant terms.
fn determinant_scale(t: &ModeTrace, radius: f64) -> f64 {
    let kr = t.k * radius;
    (t.u_r.abs() * t.k + t.flux_r.abs()) * (bessel_j(t.m, kr).abs() + bessel_j_prime(t.m, kr).abs())
}

/// Scattering coefficient `c_m` in `u = J_m(kr) + c_m H_m⁽¹⁾(kr)` outside the
/// disk, from matching value and flux with the interior solution.
pub fn scattering_coeff(profile: &RadialProfile, m: i32, k: f64) -> Result<Complex64, RadialError> {
    scattering_from_trace(&integrate_mode(profile, m, k), profile.radius)
}

pub fn scattering_from_trace(t: &ModeTrace, radius: f64) -> Result<Complex64, RadialError> {
    let kr = t.k * radius;
    let h = hankel1(t.m, kr)?;
    let hp = hankel1_prime(t.m, kr)? * t.k;
    // Unknowns (α, c): α u_R − c H = J, α flux_R − c kH' = kJ'.
    let cond = condition_2x2([Complex64::new(t.u_r, 0.0), -h, Complex64::new(t.flux_r, 0.0), -hp]);
    if !(cond <= 1e12) {
        return Err(RadialError::IllConditioned { m: t.m, k: t.k, condition: cond });
    }
    let d = determinant_from_trace(t, radius);
    Ok(d / (h * t.flux_r - hp * t.u_r))
}

/// 2-norm condition number of the row-major 2×2 matrix.
fn condition_2x2(m: [Complex64; 4]) -> f64 {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[0] * m[3] - m[1] * m[2]).norm_sqr();
    let disc = (fro2 * fro2 - 4.0 * det).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    let smin2 = if smax2 > 0.0 { det / smax2 } else { 0.0 };
    (smax2 / smin2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeRoot {
    pub k: f64,
    /// `|d_m(k)|` at the returned root.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeSearch {
    pub roots: Vec<TeRoot>,
    pub warnings: Vec<String>,
    pub degenerate: bool,
}

/// Sign-change bracketing of `d_m` on an `n`-point grid over `[k_lo, k_hi]`
/// followed by bisection to `|Δk| < 10⁻¹⁰`.
pub fn find_te(profile: &RadialProfile, m: i32, k_lo: f64, k_hi: f64, n: usize) -> Result<TeSearch, RadialError> {
    find_te_steps(profile, m, k_lo, k_hi, n, DEFAULT_STEPS)
}

/// [`find_te`] with `steps` RK4 steps per integration.
pub fn find_te_steps(profile: &RadialProfile, m: i32, k_lo: f64, k_hi: f64, n: usize, steps: usize) -> Result<TeSearch, RadialError> {
    if n < 2 || !(k_lo > 0.0) || !(k_hi > k_lo) {
        return Err(RadialError::InvalidParameter(format!("need 0 < k_lo < k_hi and n >= 2 (got {k_lo}, {k_hi}, {n})")));
    }
    let ks: Vec<f64> = (0..n).map(|i| k_lo + (k_hi - k_lo) * i as f64 / (n - 1) as f64).collect();
    let traces: Vec<ModeTrace> = ks.par_iter().map(|&k| integrate_mode_steps(profile, m, k, steps)).collect();
    let d: Vec<f64> = traces.iter().map(|t| determinant_from_trace(t, profile.radius)).collect();
    let rel = traces.iter().zip(&d).map(|(t, d)| d.abs() / determinant_scale(t, profile.radius).max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let mut out = TeSearch { roots: Vec::new(), warnings: Vec::new(), degenerate: false };
    if rel < 1e-9 {
        out.degenerate = true;
        out.warnings.push(format!("determinant vanishes identically for m = {m} (relative size {rel:.2e}); no contrast"));
        return Ok(out);
    }
    let det = |k: f64| determinant_from_trace(&integrate_mode_steps(profile, m, k, steps), profile.radius);
    for i in 0..n - 1 {
        let (a, b) = (d[i], d[i + 1]);
        if a == 0.0 {
            out.roots.push(TeRoot { k: ks[i], residual: 0.0 });
            continue;
        }
        if a * b < 0.0 {
            let (mut lo, mut hi, mut flo) = (ks[i], ks[i + 1], a);
            while hi - lo >= 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = det(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            let k = 0.5 * (lo + hi);
            out.roots.push(TeRoot { k, residual: det(k).abs() });
        }
        if i > 0 {
            let p = d[i - 1];
            if p * a > 0.0 && a * b > 0.0 && a.abs() < p.abs() && a.abs() < b.abs() {
                out.warnings
                    .push(format!("m = {m}: |d| has a local minimum near k = {:.6} without a sign change; a close root pair may be missed", ks[i]));
            }
        }
    }
    if d[n - 1] == 0.0 {
        out.roots.push(TeRoot { k: ks[n - 1], residual: 0.0 });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralCondition {
    pub value: f64,
    pub distance_to_one: f64,
}

/// `(1/R)∫₀^R √(n/a) dr` by composite Simpson with `2¹²` panels.
pub fn integral_condition(profile: &RadialProfile) -> IntegralCondition {
    integral_condition_panels(profile, 1 << 12)
}

pub fn integral_condition_panels(profile: &RadialProfile, panels: usize) -> IntegralCondition {
    let panels = panels + panels % 2;
    let r = profile.radius;
    let h = r / panels as f64;
    let f = |x: f64| ((profile.n)(x) / (profile.a)(x)).sqrt();
    let mut s = f(0.0) + f(r);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let value = s * h / 3.0 / r;
    IntegralCondition { value, distance_to_one: (value - 1.0).abs() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: i32,
    pub k: f64,
    pub d: f64,
    pub c: Complex64,
    pub unitarity: f64,
}

/// `d_m`, `c_m` and `|1 + 2c_m|` over the given wave numbers, in input order.
pub fn radial_sweep(profile: &RadialProfile, m: i32, ks: &[f64]) -> Result<Vec<SweepRow>, RadialError> {
    ks.par_iter()
        .map(|&k| {
            let t = integrate_mode(profile, m, k);
            let c = scattering_from_trace(&t, profile.radius)?;
            Ok(SweepRow { m, k, d: determinant_from_trace(&t, profile.radius), c, unitarity: (1.0 + 2.0 * c).norm() })
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "m,k,d_m,re_c_m,im_c_m,abs_1_plus_2c_m")?;
    for r in rows {
        writeln!(f, "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", r.m, r.k, r.d, r.c.re, r.c.im, r.unitarity)?;
    }
    Ok(())
}

/// Far-field mode weight for plane-wave incidence: the scattered far field
/// is `√(2/(πk)) e^{−iπ/4} Σ_m c_m e^{im(θ − θ_d)}`.
pub fn mie_far_field(coeffs: &[(i32, Complex64)], k: f64, incidence_angle: f64, theta: f64) -> Complex64 {
    let pref = (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
    pref * coeffs.iter().map(|&(m, c)| c * Complex64::from_polar(1.0, m as f64 * (theta - incidence_angle))).sum::<Complex64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_d(m: i32, k: f64) -> f64 {
        bessel_j(m, 2.0 * k) * k * bessel_j_prime(m, k) - 2.0 * k * bessel_j_prime(m, 2.0 * k) * bessel_j(m, k)
    }

    fn cos_profile() -> RadialProfile {
        RadialProfile::new(Arc::new(|_| 1.0), Arc::new(|r: f64| 2.0 + (PI * r).cos()), 1.0).unwrap()
    }

    #[test]
    fn free_equation_gives_bessel() {
        let p = RadialProfile::constant(1.0, 1.0, 1.0).unwrap();
        for m in [0, 1, 3, 7] {
            for k in [0.7, 2.0, 5.5] {
                let t = integrate_mode(&p, m, k);
                let c1 = t.u_r / bessel_j(m, k);
                let c2 = t.flux_r / (k * bessel_j_prime(m, k));
                assert!(((c1 - c2) / c1).abs() < 1e-8, "m={m} k={k}: {c1} {c2}");
            }
        }
    }

    #[test]
    fn constant_index_four_rescales() {
        let p = RadialProfile::constant(1.0, 4.0, 1.0).unwrap();
        for m in [0, 2, 5] {
            let k = 1.9;
            let t = integrate_mode(&p, m, k);
            let c1 = t.u_r / bessel_j(m, 2.0 * k);
            let c2 = t.flux_r / (2.0 * k * bessel_j_prime(m, 2.0 * k));
            assert!(((c1 - c2) / c1).abs() < 1e-8);
        }
    }

    #[test]
    fn step_halving_oracle() {
        let p = cos_profile();
        let a = integrate_mode_steps(&p, 0, 3.0, 4096);
        let b = integrate_mode_steps(&p, 0, 3.0, 8192);
        assert!((a.u_r - b.u_r).abs() < 1e-9 * b.u_r.abs().max(1.0));
        assert!((a.flux_r - b.flux_r).abs() < 1e-9 * b.flux_r.abs().max(1.0));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = cos_profile();
        for m in [0, 2] {
            let t: Vec<ModeTrace> = [512, 1024, 2048].iter().map(|&s| integrate_mode_steps(&p, m, 3.0, s)).collect();
            let e1 = (t[0].u_r - t[1].u_r).abs() + (t[0].flux_r - t[1].flux_r).abs();
            let e2 = (t[1].u_r - t[2].u_r).abs() + (t[1].flux_r - t[2].flux_r).abs();
            let ratio = e1 / e2;
            assert!((8.0..=32.0).contains(&ratio), "m={m} ratio {ratio}");
        }
    }

    #[test]
    fn contrast_free_determinant_vanishes() {
        let p = RadialProfile::constant(1.0, 1.0, 1.0).unwrap();
        for k in [0.5, 3.0, 8.0] {
            let t = integrate_mode(&p, 1, k);
            assert!(determinant_from_trace(&t, 1.0).abs() < 1e-10 * determinant_scale(&t, 1.0));
            assert!(scattering_coeff(&p, 1, k).unwrap().norm() < 1e-10);
        }
        let s = find_te(&p, 0, 0.01, 10.0, 200).unwrap();
        assert!(s.degenerate && s.roots.is_empty());
    }

    #[test]
    fn determinant_matches_closed_form_sign() {
        let p = RadialProfile::constant(1.0, 4.0, 1.0).unwrap();
        for &k in &[0.5, 1.3, 2.9, 4.4, 7.7] {
            let d = te_determinant(&p, 0, k);
            assert_eq!(d.signum(), closed_form_d(0, k).signum());
        }
    }

    #[test]
    fn roots_match_closed_form() {
        let p = RadialProfile::constant(1.0, 4.0, 1.0).unwrap();
        let oracle = |m: i32| -> Vec<f64> {
            let n = 4000;
            let ks: Vec<f64> = (0..n).map(|i| 1e-3 + (10.0 - 1e-3) * i as f64 / (n - 1) as f64).collect();
            let mut roots = Vec::new();
            for w in ks.windows(2) {
                let (mut lo, mut hi) = (w[0], w[1]);
                if closed_form_d(m, lo) * closed_form_d(m, hi) < 0.0 {
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if closed_form_d(m, lo) * closed_form_d(m, mid) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    roots.push(0.5 * (lo + hi));
                }
            }
            roots
        };
        let mut lists = Vec::new();
        for m in [0, 1] {
            let found = find_te(&p, m, 1e-3, 10.0, 400).unwrap();
            let want = oracle(m);
            assert!(want.len() >= 3);
            assert_eq!(found.roots.len(), want.len(), "m = {m}");
            for (f, w) in found.roots.iter().zip(&want) {
                assert!((f.k - w).abs() < 1e-8, "m={m}: {} vs {w}", f.k);
                assert!(scattering_coeff(&p, m, f.k).unwrap().norm() < 1e-8);
            }
            lists.push(want);
        }
        assert!(lists[0].iter().all(|a| lists[1].iter().all(|b| (a - b).abs() > 1e-3)));
    }

    #[test]
    fn unitarity_for_real_profiles() {
        for p in [RadialProfile::constant(1.0, 4.0, 1.0).unwrap(), cos_profile(), RadialProfile::constant(2.5, 0.7, 0.8).unwrap()] {
            for m in [0, 1, 4] {
                for k in [0.3, 2.2, 6.1, 9.9] {
                    let c = scattering_coeff(&p, m, k).unwrap();
                    assert!(((1.0 + 2.0 * c).norm() - 1.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn integral_condition_values() {
        let eq = RadialProfile::new(Arc::new(|r: f64| 1.0 + r * r), Arc::new(|r: f64| 1.0 + r * r), 1.0).unwrap();
        assert!((integral_condition(&eq).value - 1.0).abs() < 1e-14);
        assert!((integral_condition(&RadialProfile::constant(1.0, 4.0, 1.0).unwrap()).value - 2.0).abs() < 1e-14);
        let p = cos_profile();
        let a = integral_condition(&p).value;
        let b = integral_condition_panels(&p, 1 << 14).value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn sweep_rows_in_order() {
        let p = RadialProfile::constant(1.0, 4.0, 1.0).unwrap();
        let ks: Vec<f64> = (1..20).map(|i| i as f64 * 0.5).collect();
        let rows = radial_sweep(&p, 0, &ks).unwrap();
        for (r, k) in rows.iter().zip(&ks) {
            assert_eq!(r.k, *k);
            assert!((r.unitarity - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn condition_number_of_identity() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        assert!((condition_2x2([one, zero, zero, one]) - 1.0).abs() < 1e-12);
        assert!(condition_2x2([one, one, one, one]).is_infinite() || condition_2x2([one, one, one, one]) > 1e12);
    }
}
