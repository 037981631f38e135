//! Special-function kernel: modified Bessel functions of integer order,
//! generalized Laguerre polynomials, log-gamma and principal complex powers.
//!
//! Everything here is a pure function of its scalar arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest argument accepted by [`bessel_i`]; beyond it `I_n(z)` overflows soon after.
pub const BESSEL_Z_MAX: f64 = 200.0;
/// Largest order accepted by the public Bessel entry points.
pub const BESSEL_ORDER_MAX: u32 = 200;
/// Largest argument accepted by the exponentially scaled Bessel routines.
pub const BESSEL_SCALED_Z_MAX: f64 = 1.0e5;
/// Largest Laguerre degree accepted by [`laguerre`].
pub const LAGUERRE_DEGREE_MAX: i64 = 300;

const SERIES_LIMIT: f64 = 20.0;
const RESCALE_ABOVE: f64 = 1.0e150;

fn check_bessel(order: u32, z: f64, z_max: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 || z > z_max {
        return Err(Error::domain(format!("Bessel argument z = {z} outside [0, {z_max}]")));
    }
    if order > BESSEL_ORDER_MAX {
        return Err(Error::domain(format!("Bessel order {order} exceeds {BESSEL_ORDER_MAX}")));
    }
    Ok(())
}

/// Modified Bessel function of the first kind `I_order(z)`.
pub fn bessel_i(order: u32, z: f64) -> Result<f64> {
    check_bessel(order, z, BESSEL_Z_MAX)?;
    if z < SERIES_LIMIT {
        Ok(series(order, z))
    } else {
        Ok(miller_scaled(order as usize, z)[order as usize] * z.exp())
    }
}

/// `exp(-z) I_order(z)`, usable far beyond the overflow point of [`bessel_i`].
pub fn bessel_i_scaled(order: u32, z: f64) -> Result<f64> {
    check_bessel(order, z, BESSEL_SCALED_Z_MAX)?;
    if z < SERIES_LIMIT {
        Ok(series(order, z) * (-z).exp())
    } else {
        Ok(miller_scaled(order as usize, z)[order as usize])
    }
}

/// Derivative `I'_order(z) = (I_{order-1}(z) + I_{order+1}(z)) / 2`.
pub fn bessel_i_prime(order: u32, z: f64) -> Result<f64> {
    check_bessel(order, z, BESSEL_Z_MAX)?;
    let upper = bessel_i_unchecked(order as usize + 1, z);
    if order == 0 {
        return Ok(upper);
    }
    let lower = bessel_i_unchecked(order as usize - 1, z);
    Ok(0.5 * (lower + upper))
}

fn bessel_i_unchecked(order: usize, z: f64) -> f64 {
    if z < SERIES_LIMIT {
        series(order as u32, z)
    } else {
        miller_scaled(order, z)[order] * z.exp()
    }
}

/// Scaled values `exp(-z) I_k(z)` for `k = 0..=max_order`.
///
/// Orders may exceed [`BESSEL_ORDER_MAX`]; this is the workhorse for the
/// Fourier coefficients of `exp(δ cos φ)`.
pub(crate) fn bessel_i_scaled_seq(max_order: usize, z: f64) -> Result<Vec<f64>> {
    if !z.is_finite() || z < 0.0 || z > BESSEL_SCALED_Z_MAX {
        return Err(Error::domain(format!("Bessel argument z = {z} out of range")));
    }
    if z < SERIES_LIMIT {
        let scale = (-z).exp();
        Ok((0..=max_order).map(|k| series(k as u32, z) * scale).collect())
    } else {
        Ok(miller_scaled(max_order, z))
    }
}

/// Ratio `I_1(z) / I_0(z)` for any `z >= 0`.
pub(crate) fn bessel_ratio_10(z: f64) -> Result<f64> {
    let seq = bessel_i_scaled_seq(1, z)?;
    Ok(seq[1] / seq[0])
}

/// `I_1(z) / z`, finite at the origin (limit 1/2).
pub(crate) fn bessel_i1_over_z(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        // (1/2) sum (z^2/4)^k / (k! (k+1)!)
        let q = 0.25 * z * z;
        let mut term = 0.5;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            term *= q / ((k + 1.0) * (k + 2.0));
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        miller_scaled(1, z)[1] * z.exp() / z
    }
}

/// Ascending power series; all terms are positive so there is no cancellation.
fn series(order: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let n = order as f64;
    let mut term = (n * (0.5 * z).ln() - ln_gamma_unchecked(n + 1.0)).exp();
    if term == 0.0 {
        return 0.0;
    }
    let q = 0.25 * z * z;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        term *= q / ((k + 1.0) * (n + k + 1.0));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Miller downward recurrence normalized by `exp(-z) (I_0 + 2 sum I_k) = 1`.
fn miller_scaled(max_order: usize, z: f64) -> Vec<f64> {
    let start = max_order + 30 + (120.0 * z).sqrt().ceil() as usize;
    let mut out = vec![0.0; max_order + 1];
    let mut above = 0.0_f64;
    let mut current = 1.0e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        if k <= max_order {
            out[k] = current;
        }
        norm += 2.0 * current;
        let below = above + (2.0 * k as f64 / z) * current;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            current *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(k.min(max_order + 1)) {
                *v *= s;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Generalized Laguerre polynomial `L_degree^(a)(x)` by three-term recurrence.
pub fn laguerre(degree: i64, a: f64, x: f64) -> Result<f64> {
    let (mantissa, ln_scale) = laguerre_scaled(degree, a, x)?;
    let value = mantissa * ln_scale.exp();
    if !value.is_finite() {
        return Err(Error::Range(format!("Laguerre L_{degree}^({a})({x}) overflows f64")));
    }
    Ok(value)
}

/// Laguerre value as `mantissa * exp(ln_scale)`, immune to overflow.
pub(crate) fn laguerre_scaled(degree: i64, a: f64, x: f64) -> Result<(f64, f64)> {
    if degree < 0 {
        return Err(Error::domain(format!("negative Laguerre degree {degree}")));
    }
    if degree > LAGUERRE_DEGREE_MAX {
        return Err(Error::Range(format!("Laguerre degree {degree} exceeds {LAGUERRE_DEGREE_MAX}")));
    }
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::domain(format!("Laguerre superscript {a} must exceed -1")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("Laguerre argument {x} must be >= 0")));
    }
    Ok(laguerre_scaled_unchecked(degree as usize, a, x))
}

pub(crate) fn laguerre_scaled_unchecked(degree: usize, a: f64, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    if degree == 0 {
        return (prev, 0.0);
    }
    let mut cur = 1.0 + a - x;
    let mut ln_scale = 0.0;
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur /= RESCALE_ABOVE;
            prev /= RESCALE_ABOVE;
            ln_scale += RESCALE_ABOVE.ln();
        }
    }
    (cur, ln_scale)
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(mut x: f64) -> f64 {
    const SHIFT_TO: f64 = 16.0;
    let mut product = 1.0;
    while x < SHIFT_TO {
        product *= x;
        x += 1.0;
    }
    stirling(x) - product.ln()
}

fn stirling(x: f64) -> f64 {
    // Bernoulli-number corrections B_2k / (2k (2k-1) x^(2k-1)).
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in C {
        corr += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + corr
}

/// Principal-branch power `exp(exponent * Log(base))` for `Re(base) > 0`.
pub fn complex_pow(base: Complex64, exponent: f64) -> Result<Complex64> {
    if !(base.re > 0.0) || !base.im.is_finite() || !exponent.is_finite() {
        return Err(Error::domain(format!("complex_pow needs Re(base) > 0, got {base}")));
    }
    let ln_mod = base.norm().ln();
    let arg = base.im.atan2(base.re);
    Ok(Complex64::from_polar((exponent * ln_mod).exp(), exponent * arg))
}
