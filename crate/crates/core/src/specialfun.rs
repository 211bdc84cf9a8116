//! Integer-order cylindrical Bessel functions of real argument.
//!
//! `J_m` comes from Miller's backward recurrence normalized by the identity
//! `J_0 + 2 Σ J_{2k} = 1`. `Y_0` and `Y_1` come from Neumann series over the
//! same backward sequence for `x < ASYMPTOTIC_SWITCH` and from the Hankel
//! asymptotic expansion above it; higher orders of `Y` follow by upward
//! recurrence, which is stable for the second kind.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::SpecialFunctionError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or above this use the Hankel asymptotic expansion for `Y_0`, `Y_1`.
const ASYMPTOTIC_SWITCH: f64 = 20.0;

/// Backward recurrence values are rescaled once they exceed this magnitude.
const RESCALE_THRESHOLD: f64 = 1e250;

/// Normalized backward-recurrence sequence `J_0(x) ..= J_top(x)` with `top`
/// large enough that everything below `min_top` is converged.
fn miller_sequence(min_top: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let n = (min_top as f64).max(x);
    let mut top = (n + 20.0 + (60.0 * n).sqrt()) as usize;
    top += top % 2;
    top = top.max(min_top + 2);

    let mut seq = vec![0.0; top + 1];
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary seed at k = top
    let mut norm = 0.0;
    seq[top] = j_cur;
    if top.is_multiple_of(2) {
        norm += 2.0 * j_cur;
    }
    for k in (1..=top).rev() {
        let j_prev = (2.0 * k as f64 / x) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > RESCALE_THRESHOLD {
            let s = 1.0 / RESCALE_THRESHOLD;
            j_cur *= s;
            j_next *= s;
            norm *= s;
            for v in seq[k..].iter_mut() {
                *v *= s;
            }
        }
        seq[k - 1] = j_cur;
        let idx = k - 1;
        if idx == 0 {
            norm += j_cur;
        } else if idx % 2 == 0 {
            norm += 2.0 * j_cur;
        }
    }
    let scale = 1.0 / norm;
    for v in seq.iter_mut() {
        *v *= scale;
    }
    seq
}

/// `J_0(x) ..= J_{m_max}(x)` for `x >= 0`.
pub fn bessel_j_array(m_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_array: x must be finite and >= 0, got {x}");
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let seq = miller_sequence(m_max, x);
    out.copy_from_slice(&seq[..=m_max]);
    out
}

/// Bessel function of the first kind `J_m(x)`. Negative orders use
/// `J_{-m} = (-1)^m J_m` and negative arguments `J_m(-x) = (-1)^m J_m(x)`.
pub fn bessel_j(m: i32, x: f64) -> f64 {
    let order = m.unsigned_abs() as usize;
    let mut sign = if m < 0 && order % 2 == 1 { -1.0 } else { 1.0 };
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    sign * bessel_j_array(order, x.abs())[order]
}

/// `J_m'(x)` via `J_m' = (J_{m-1} - J_{m+1}) / 2`.
pub fn bessel_j_prime(m: i32, x: f64) -> f64 {
    0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
}

/// Hankel asymptotic `(J_ν, Y_ν)` for large `x`.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - nu * FRAC_PI_2 - FRAC_PI_4;
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `(Y_0(x), Y_1(x))` for `x > 0`.
fn bessel_y01(x: f64) -> (f64, f64) {
    if x >= ASYMPTOTIC_SWITCH {
        (hankel_asymptotic(0.0, x).1, hankel_asymptotic(1.0, x).1)
    } else {
        neumann_y01(x)
    }
}

/// Neumann series for `Y_0`, `Y_1` over the normalized Miller sequence.
fn neumann_y01(x: f64) -> (f64, f64) {
    let seq = miller_sequence(2, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < seq.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * seq[2 * k] / k as f64;
        s1 += sign * (seq[2 * k - 1] - seq[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * seq[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * (log_term * seq[1] - seq[0] / x + s1);
    (y0, y1)
}

/// `Y_0(x) ..= Y_{m_max}(x)`. Overflowing orders saturate at `-inf`.
pub fn bessel_y_array(m_max: usize, x: f64) -> Result<Vec<f64>, SpecialFunctionError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialFunctionError::Domain { function: "Y", x });
    }
    let (y0, y1) = bessel_y01(x);
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(y0);
    if m_max >= 1 {
        out.push(y1);
    }
    for m in 1..m_max {
        let next = (2.0 * m as f64 / x) * out[m] - out[m - 1];
        if !next.is_finite() {
            out.resize(m_max + 1, f64::NEG_INFINITY);
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// Bessel function of the second kind `Y_m(x)`, `x > 0`.
pub fn bessel_y(m: i32, x: f64) -> Result<f64, SpecialFunctionError> {
    let order = m.unsigned_abs() as usize;
    let sign = if m < 0 && order % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * bessel_y_array(order, x)?[order])
}

/// `Y_m'(x)`.
pub fn bessel_y_prime(m: i32, x: f64) -> Result<f64, SpecialFunctionError> {
    Ok(0.5 * (bessel_y(m - 1, x)? - bessel_y(m + 1, x)?))
}

/// `H^{(1)}_0(x) ..= H^{(1)}_{m_max}(x)`.
pub fn hankel1_array(m_max: usize, x: f64) -> Result<Vec<Complex64>, SpecialFunctionError> {
    let y = bessel_y_array(m_max, x)?;
    let j = bessel_j_array(m_max, x);
    Ok(j.into_iter().zip(y).map(|(j, y)| Complex64::new(j, y)).collect())
}

/// Hankel function of the first kind `H^{(1)}_m(x) = J_m(x) + i Y_m(x)`.
pub fn hankel1(m: i32, x: f64) -> Result<Complex64, SpecialFunctionError> {
    Ok(Complex64::new(bessel_j(m, x), bessel_y(m, x)?))
}

/// `H^{(1)'}_m(x)`.
pub fn hankel1_prime(m: i32, x: f64) -> Result<Complex64, SpecialFunctionError> {
    Ok(0.5 * (hankel1(m - 1, x)? - hankel1(m + 1, x)?))
}

/// Value and derivative of `J_m`, `Y_m` and `H^{(1)}_m` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylFunValue {
    pub order: i32,
    pub argument: f64,
    pub j: f64,
    pub j_prime: f64,
    pub y: f64,
    pub y_prime: f64,
}

impl CylFunValue {
    pub fn new(order: i32, argument: f64) -> Result<Self, SpecialFunctionError> {
        Ok(Self {
            order,
            argument,
            j: bessel_j(order, argument),
            j_prime: bessel_j_prime(order, argument),
            y: bessel_y(order, argument)?,
            y_prime: bessel_y_prime(order, argument)?,
        })
    }

    pub fn hankel1(&self) -> Complex64 {
        Complex64::new(self.j, self.y)
    }

    pub fn hankel1_prime(&self) -> Complex64 {
        Complex64::new(self.j_prime, self.y_prime)
    }

    /// `J Y' - J' Y`, which equals `2 / (π x)`.
    pub fn wronskian(&self) -> f64 {
        self.j * self.y_prime - self.j_prime * self.y
    }
}

/// `2 / (π x)`, the value of the cross product `J_m Y_m' - J_m' Y_m`.
pub fn wronskian_exact(x: f64) -> f64 {
    2.0 / (PI * x)
}
