//! Circular squeezed states on the unit circle.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{bessel_i1_over_z, bessel_i_scaled_seq, bessel_ratio_10};

/// Largest angular spread accepted by [`delta_from_spread`].
pub const MAX_SPREAD: f64 = 50.0;

/// Angular packet `N₂ exp(δ cos(φ-φ₀) + iβ(φ-φ₀))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CssParams {
    delta: f64,
    beta: i64,
    phi0: f64,
    /// `ln N₂`, stored in log form because `I₀(2δ)` overflows for large δ.
    ln_norm: f64,
}

impl CssParams {
    /// Validates `δ >= 0` and wraps `φ₀` into `[-π, π)`.
    pub fn new(delta: f64, beta: i64, phi0: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::domain(format!("delta must be finite and >= 0, got {delta}")));
        }
        if !phi0.is_finite() {
            return Err(Error::domain("phi0 must be finite"));
        }
        let seq = bessel_i_scaled_seq(0, 2.0 * delta)?;
        // I₀(2δ) = exp(2δ) · scaled
        let ln_i0 = 2.0 * delta + seq[0].ln();
        Ok(CssParams {
            delta,
            beta,
            phi0: wrap_angle(phi0),
            ln_norm: -0.5 * ((2.0 * std::f64::consts::PI).ln() + ln_i0),
        })
    }

    /// Accepts a real-valued β only when it is an exact integer.
    pub fn with_real_beta(delta: f64, beta: f64, phi0: f64) -> Result<Self> {
        if !beta.is_finite() || beta.fract() != 0.0 || beta.abs() > 1e15 {
            return Err(Error::domain(format!("beta must be an integer for a single-valued packet, got {beta}")));
        }
        Self::new(delta, beta as i64, phi0)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> i64 {
        self.beta
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Normalization constant `N₂ = (2π I₀(2δ))^{-1/2}`.
    pub fn norm(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// The same packet rotated to orientation `phi0`.
    pub fn rotated(&self, phi0: f64) -> Self {
        CssParams { phi0: wrap_angle(phi0), ..*self }
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = (phi + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w >= std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Amplitude of the packet at angle `phi`.
pub fn css_eval(p: &CssParams, phi: f64) -> Result<Complex64> {
    if !phi.is_finite() {
        return Err(Error::domain("phi must be finite"));
    }
    let x = phi - p.phi0;
    // exp(δ(cos x - 1)) keeps the modulus in range; δ is added back in log form.
    let modulus = (p.ln_norm + p.delta * x.cos()).exp();
    Ok(Complex64::from_polar(modulus, p.beta as f64 * x))
}

/// Solves `(ΔL)² = (δ/2) I₁(2δ)/I₀(2δ)` for δ.
pub fn delta_from_spread(dl: f64) -> Result<f64> {
    if !dl.is_finite() || dl < 0.0 {
        return Err(Error::domain(format!("angular-momentum spread must be >= 0, got {dl}")));
    }
    if dl == 0.0 {
        return Ok(0.0);
    }
    if dl > MAX_SPREAD {
        return Err(Error::Range(format!("angular-momentum spread {dl} exceeds {MAX_SPREAD}")));
    }
    let target = dl * dl;
    let f = |d: f64| -> Result<(f64, f64)> {
        let z = 2.0 * d;
        let r = bessel_ratio_10(z)?;
        let dr = if z > 0.0 { 1.0 - r / z - r * r } else { 0.5 };
        Ok((0.5 * d * r - target, 0.5 * r + d * dr))
    };
    let mut lo = 0.0;
    let mut hi = 2.0 * target + 2.0;
    while f(hi)?.0 <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let tol = 1e-12 * target.max(1.0);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x)?;
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(x);
        }
    }
    Err(Error::Solver { iterations: 200, residual: f(x)?.0 })
}

/// First- and second-order expectations in the packet's own frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CssExpectations {
    pub cos: f64,
    pub sin: f64,
    pub cos2: f64,
    pub sin2: f64,
    pub l: f64,
    pub l2: f64,
    pub dcos: f64,
    pub dsin: f64,
    pub dl: f64,
}

/// Closed-form expectations of `cos(φ-φ₀)`, `sin(φ-φ₀)`, `L` and their squares.
pub fn css_expectations(p: &CssParams) -> Result<CssExpectations> {
    let z = 2.0 * p.delta;
    let (r, sin2) = ratio_and_sin2(z)?;
    let cos2 = 1.0 - sin2;
    let beta = p.beta as f64;
    let var_l = 0.5 * p.delta * r;
    Ok(CssExpectations {
        cos: r,
        sin: 0.0,
        cos2,
        sin2,
        l: beta,
        l2: var_l + beta * beta,
        dcos: (cos2 - r * r).max(0.0).sqrt(),
        dsin: sin2.sqrt(),
        dl: var_l.sqrt(),
    })
}

/// `I₁(z)/I₀(z)` and `⟨sin²⟩ = I₁(z)/(z I₀(z))`, the latter finite at `z = 0`.
fn ratio_and_sin2(z: f64) -> Result<(f64, f64)> {
    if z < 1.0 {
        let i0 = bessel_i_scaled_seq(0, z)?[0] * z.exp();
        let i1_over_z = bessel_i1_over_z(z);
        Ok((z * i1_over_z / i0, i1_over_z / i0))
    } else {
        let r = bessel_ratio_10(z)?;
        Ok((r, r / z))
    }
}

/// Means and variances of `cos(φ-probe)` and `sin(φ-probe)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeMoments {
    pub cos: f64,
    pub sin: f64,
    pub var_cos: f64,
    pub var_sin: f64,
}

/// Moments of the rotated coordinates `cos(φ-probe)`, `sin(φ-probe)`.
pub fn css_probe_moments(p: &CssParams, probe: f64) -> Result<ProbeMoments> {
    let ex = css_expectations(p)?;
    let theta = p.phi0 - probe;
    let (s, c) = theta.sin_cos();
    let mean_cos = ex.cos * c;
    let mean_sin = ex.cos * s;
    Ok(ProbeMoments {
        cos: mean_cos,
        sin: mean_sin,
        var_cos: ex.cos2 * c * c + ex.sin2 * s * s - mean_cos * mean_cos,
        var_sin: ex.sin2 * c * c + ex.cos2 * s * s - mean_sin * mean_sin,
    })
}

/// Residual `Δsinφ ΔL - |⟨cosφ⟩|/2` of the minimized relation (packet frame).
pub fn css_minimality(p: &CssParams) -> Result<f64> {
    let ex = css_expectations(p)?;
    Ok(ex.dsin * ex.dl - 0.5 * ex.cos.abs())
}

/// Residual `Δcosφ ΔL - |⟨sinφ⟩|/2` of the companion relation (packet frame).
pub fn css_companion_residual(p: &CssParams) -> Result<f64> {
    let ex = css_expectations(p)?;
    Ok(ex.dcos * ex.dl - 0.5 * ex.sin.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QInvariant {
    pub mu2: f64,
    pub nu2: f64,
    pub q: f64,
    pub q0: f64,
}

/// `μ²`, `ν²` and `Q = μ² + ν²` at `probe`, and the reference value `Q₀`
/// attained at `probe = φ₀`.
pub fn css_q_invariant(p: &CssParams, probe: f64) -> Result<QInvariant> {
    let ex = css_expectations(p)?;
    let m = css_probe_moments(p, probe)?;
    let var_l = ex.dl * ex.dl;
    let mu2 = m.var_cos * var_l - 0.25 * m.sin * m.sin;
    let nu2 = m.var_sin * var_l - 0.25 * m.cos * m.cos;
    let q0 = (ex.cos2 - ex.cos * ex.cos) * var_l + (ex.sin2 * var_l - 0.25 * ex.cos * ex.cos);
    Ok(QInvariant { mu2, nu2, q: mu2 + nu2, q0 })
}

/// Real Fourier amplitudes `a_l = I_{β-l}(δ)/√I₀(2δ)` for `l` in `l_min..=l_max`,
/// the weights of `e^{ilφ}/√(2π)` in the packet with `φ₀ = 0`.
pub(crate) fn fourier_amplitudes(p: &CssParams, l_min: i64, l_max: i64) -> Result<Vec<f64>> {
    if l_max < l_min {
        return Ok(Vec::new());
    }
    let max_order = (p.beta - l_min).abs().max((p.beta - l_max).abs()) as usize;
    let seq = bessel_i_scaled_seq(max_order, p.delta)?;
    let i0 = bessel_i_scaled_seq(0, 2.0 * p.delta)?[0];
    let scale = 1.0 / i0.sqrt();
    Ok((l_min..=l_max).map(|l| seq[(p.beta - l).unsigned_abs() as usize] * scale).collect())
}

/// Coefficient of `e^{ilφ}/√(2π)` in the packet, including the orientation phase.
pub fn css_fourier_coefficient(p: &CssParams, l: i64) -> Result<Complex64> {
    let a = fourier_amplitudes(p, l, l)?[0];
    Ok(Complex64::from_polar(a, -(l as f64) * p.phi0))
}
