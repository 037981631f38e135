//! Approximate map from a classical ellipse to packet parameters, and the
//! Runge–Lenz `Z` surface over orbit shapes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runge_lenz::{runge_lenz_analytic, runge_lenz_diagnostics};
use super::EssParams;
use crate::angular::{delta_from_spread, MAX_SPREAD};
use crate::error::{Error, Result};
use crate::specfun::bessel_ratio_10;

/// One sign branch of the orbit map, with real-valued `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitBranch {
    pub alpha: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitParams {
    /// `β > 0` branch (counter-clockwise motion).
    pub positive: OrbitBranch,
    /// `β < 0` branch.
    pub negative: OrbitBranch,
    /// Positive branch with `β` rounded to the nearest integer and `γ₁` recomputed.
    pub nearest: EssParams,
}

/// Packet parameters matched to the ellipse `(a, e, η)` for radial width `Δr`
/// and angular parameter `δ`. The map is approximate: it holds to the order of
/// the ratio `I₀(2δ)/I₁(2δ)` that multiplies its terms.
pub fn params_from_orbit(a: f64, e: f64, eta: f64, dr: f64, delta: f64) -> Result<OrbitParams> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("semimajor axis must be > 0, got {a}")));
    }
    if !(0.0..1.0).contains(&e) {
        return Err(Error::domain(format!("eccentricity must lie in [0, 1), got {e}")));
    }
    if !(dr > 0.0) || !dr.is_finite() || !(delta > 0.0) || !eta.is_finite() {
        return Err(Error::domain("orbit map needs dr > 0, delta > 0 and finite eta"));
    }
    let rho = 1.0 / bessel_ratio_10(2.0 * delta)?;
    let (s, c) = eta.sin_cos();
    let gamma0 = rho * a / (2.0 * dr * dr) * (1.0 + e * c - e * e * s * s / (1.0 - e * c));
    let alpha = 2.0 * gamma0 * gamma0 * dr * dr - 1.0;
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "orbit (a = {a}, e = {e}) with dr = {dr} gives non-positive alpha = {alpha}"
        )));
    }
    let s2 = 2.0 * alpha + 1.0;
    let beta2 = s2 * s2 / (4.0 * gamma0 * (alpha + 1.0)) * (1.0 - e * c) * rho.powi(3);
    if !(beta2 > 0.0) {
        return Err(Error::domain(format!("orbit map gives beta^2 = {beta2}")));
    }
    let gamma1_for = |beta: f64| -s2 / (2.0 * beta * (alpha + 1.0)) * e * s * rho.powi(3);
    let branch = |beta: f64| OrbitBranch { alpha, beta, gamma0, gamma1: gamma1_for(beta) };
    let beta = beta2.sqrt();
    let beta_int = beta.round().max(1.0);
    let nearest = EssParams::new(alpha, beta_int as i64, gamma0, gamma1_for(beta_int), delta)?;
    Ok(OrbitParams { positive: branch(beta), negative: branch(-beta), nearest })
}

/// How `Z` is evaluated on each grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZMethod {
    /// Closed-form mode algebra.
    #[default]
    Analytic,
    /// Grid quadrature with a doubling error check.
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZPoint {
    pub a: f64,
    pub e: f64,
    pub alpha: f64,
    pub beta: i64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub product: f64,
    pub abs_hl: f64,
    pub z: f64,
}

/// `Z` over the tensor grid `a_grid × e_grid` (row-major in `a`) at fixed `Δr`, `ΔL` and `η`.
pub fn z_surface(a_grid: &[f64], e_grid: &[f64], dr: f64, dl: f64, eta: f64, method: ZMethod) -> Result<Vec<ZPoint>> {
    if a_grid.is_empty() || e_grid.is_empty() {
        return Err(Error::domain("z surface needs non-empty grids"));
    }
    if !(dl > 0.0) || dl > MAX_SPREAD {
        return Err(Error::domain(format!("dL must lie in (0, {MAX_SPREAD}], got {dl}")));
    }
    let delta = delta_from_spread(dl)?;
    let points: Vec<(f64, f64)> = a_grid.iter().flat_map(|&a| e_grid.iter().map(move |&e| (a, e))).collect();
    points
        .par_iter()
        .map(|&(a, e)| {
            let p = params_from_orbit(a, e, eta, dr, delta)?.nearest;
            let rl = match method {
                ZMethod::Analytic => runge_lenz_analytic(&p)?,
                ZMethod::Quadrature => runge_lenz_diagnostics(&p)?,
            };
            Ok(ZPoint {
                a,
                e,
                alpha: p.alpha(),
                beta: p.beta(),
                gamma0: p.gamma0(),
                gamma1: p.gamma1(),
                product: rl.product,
                abs_hl: rl.abs_hl,
                z: rl.z,
            })
        })
        .collect()
}
