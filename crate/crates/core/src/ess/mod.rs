//! Elliptical squeezed states: the product `ψ(r) χ(φ)` of a radial and a
//! circular squeezed state, fixed by `(n̄, l̄, ΔL)`.

mod orbit;
mod runge_lenz;
mod spectral;

pub use orbit::{params_from_orbit, z_surface, OrbitBranch, OrbitParams, ZMethod, ZPoint};
pub use runge_lenz::{
    runge_lenz_analytic, runge_lenz_diagnostics, runge_lenz_quadrature, PolarGrid, RungeLenz, RL_ANGULAR_POINTS,
    RL_RADIAL_POINTS, RL_TOLERANCE,
};
pub use spectral::{
    evolve, expand, expansion_coefficient, grid_distance, observables_vs_time, reconstruct, BasisKind, Coefficient,
    GridField, Observables, SpectralState, Window, MAX_N,
};
pub(crate) use spectral::{expand_with, quadrature_overlap, ExpansionCenter};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{css_eval, css_expectations, delta_from_spread, CssParams};
use crate::classical::{outer_apsis, planar_energy};
use crate::error::{Error, Result};
use crate::radial::{rss_eval, rss_expectations, RssParams};

/// Experiment-side inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSpec {
    pub n_bar: f64,
    pub l_bar: i64,
    pub dl: f64,
}

impl PhysicalSpec {
    pub fn new(n_bar: f64, l_bar: i64, dl: f64) -> Result<Self> {
        let s = PhysicalSpec { n_bar, l_bar, dl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_bar.is_finite() || self.n_bar <= 1.0 {
            return Err(Error::domain(format!("n_bar must exceed 1, got {}", self.n_bar)));
        }
        if self.l_bar < 1 || self.l_bar as f64 > self.n_bar - 1.0 {
            return Err(Error::domain(format!(
                "l_bar must lie in [1, n_bar - 1], got {} for n_bar = {}",
                self.l_bar, self.n_bar
            )));
        }
        if !self.dl.is_finite() || self.dl <= 0.0 {
            return Err(Error::domain(format!("dL must be > 0, got {}", self.dl)));
        }
        Ok(())
    }

    /// `E_n̄ = -1/(2(n̄ - 1/2)²)`.
    pub fn energy(&self) -> f64 {
        planar_energy(self.n_bar)
    }
}

/// Distance to the outer apsis of the ellipse with energy `E_n̄` and angular momentum `l̄`.
pub fn r_out(n_bar: f64, l_bar: f64) -> Result<f64> {
    outer_apsis(n_bar, l_bar)
}

/// Five-parameter packet, oriented with its maximum at `φ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssParams {
    alpha: f64,
    beta: i64,
    gamma0: f64,
    gamma1: f64,
    delta: f64,
    spec: Option<PhysicalSpec>,
}

impl EssParams {
    pub fn new(alpha: f64, beta: i64, gamma0: f64, gamma1: f64, delta: f64) -> Result<Self> {
        RssParams::new(alpha, gamma0, gamma1)?;
        CssParams::new(delta, beta, 0.0)?;
        Ok(EssParams { alpha, beta, gamma0, gamma1, delta, spec: None })
    }

    pub(crate) fn with_spec(mut self, spec: PhysicalSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> i64 {
        self.beta
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The physical inputs this state was built from, if any.
    pub fn spec(&self) -> Option<PhysicalSpec> {
        self.spec
    }

    pub fn radial(&self) -> RssParams {
        RssParams::new(self.alpha, self.gamma0, self.gamma1).expect("validated at construction")
    }

    pub fn angular(&self) -> CssParams {
        CssParams::new(self.delta, self.beta, 0.0).expect("validated at construction")
    }

    /// `(ΔL)² = (δ/2) I₁(2δ)/I₀(2δ)`.
    pub fn angular_variance(&self) -> f64 {
        let dl = css_expectations(&self.angular()).map(|e| e.dl).unwrap_or(0.0);
        dl * dl
    }
}

/// `⟨H⟩` of the packet as a function of the radial shape and `⟨L²⟩`.
pub fn hamiltonian_expectation(alpha: f64, gamma0: f64, gamma1: f64, l2: f64) -> f64 {
    let s = 2.0 * alpha + 1.0;
    gamma0 * (gamma0 - 4.0) / (2.0 * s) + 0.5 * gamma1 * gamma1 + gamma0 * gamma0 * l2 / (alpha * s)
}

/// Partial derivatives `(∂⟨H⟩/∂α, ∂⟨H⟩/∂γ₀)`.
fn hamiltonian_gradient(alpha: f64, gamma0: f64, l2: f64) -> (f64, f64) {
    let s = 2.0 * alpha + 1.0;
    let d_alpha = -gamma0 * (gamma0 - 4.0) / (s * s) - gamma0 * gamma0 * l2 * (4.0 * alpha + 1.0) / (alpha * s).powi(2);
    let d_gamma0 = (2.0 * gamma0 - 4.0) / (2.0 * s) + 2.0 * gamma0 * l2 / (alpha * s);
    (d_alpha, d_gamma0)
}

/// Builds the packet whose mean radius is the outer apsis and whose mean energy is `E_n̄`.
pub fn ess_build(spec: &PhysicalSpec) -> Result<EssParams> {
    spec.validate()?;
    let delta = delta_from_spread(spec.dl)?;
    let beta = spec.l_bar;
    let ang = CssParams::new(delta, beta, 0.0)?;
    let l2 = css_expectations(&ang)?.l2;
    let target_r = r_out(spec.n_bar, spec.l_bar as f64)?;
    let (alpha, gamma0) = solve_radial(target_r, spec.energy(), l2, spec.n_bar - 0.5)?;
    Ok(EssParams::new(alpha, beta, gamma0, 0.0, delta)?.with_spec(*spec))
}

const MAX_SOLVER_ITERATIONS: usize = 200;
const SOLVER_TOLERANCE: f64 = 1e-10;

/// Solves `⟨r⟩ = r_target`, `⟨H⟩ = e_target` for `(α, γ₀)` with `γ₁ = 0`.
///
/// Along the curve `γ₀ = (α+1)/r_target` the energy condition may have two
/// roots; the one with the larger `α` (the narrower packet) is returned.
pub(crate) fn solve_radial(target_r: f64, e_target: f64, l2: f64, nu: f64) -> Result<(f64, f64)> {
    if !(target_r > 0.0) || !(e_target < 0.0) {
        return Err(Error::domain("radial targets must satisfy r > 0 and E < 0"));
    }
    let gamma_of = |a: f64| (a + 1.0) / target_r;
    let h = |a: f64| hamiltonian_expectation(a, gamma_of(a), 0.0, l2) - e_target;
    let dh = |a: f64| {
        let (da, dg) = hamiltonian_gradient(a, gamma_of(a), l2);
        da + dg / target_r
    };
    let mut iterations = 0;

    // Bracket the largest root by scanning down from a wide upper bound.
    let mut hi = 2.0 * nu * nu;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        iterations += 1;
        if hi > 1e12 || iterations > MAX_SOLVER_ITERATIONS {
            return Err(Error::Solver { iterations, residual: h(hi) / e_target });
        }
    }
    let mut lo = hi;
    loop {
        lo *= 0.9;
        iterations += 1;
        if h(lo) <= 0.0 {
            break;
        }
        hi = lo;
        if lo < 1e-8 || iterations > MAX_SOLVER_ITERATIONS {
            return Err(Error::Solver { iterations, residual: h(lo) / e_target });
        }
    }

    // Safeguarded Newton inside the bracket.
    let mut a = 0.5 * (lo + hi);
    while iterations < MAX_SOLVER_ITERATIONS {
        iterations += 1;
        let v = h(a);
        if (v / e_target).abs() <= 1e-15 || (hi - lo) <= 1e-15 * hi {
            break;
        }
        if v > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let step = a - v / dh(a);
        a = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }

    // Polish both conditions jointly in (ln α, ln γ₀) with a damped Newton step.
    let resid = |a: f64, g: f64| -> [f64; 2] {
        [(a + 1.0) / (g * target_r) - 1.0, hamiltonian_expectation(a, g, 0.0, l2) / e_target - 1.0]
    };
    let norm = |f: [f64; 2]| f[0].abs().max(f[1].abs());
    let mut g = gamma_of(a);
    let mut f = resid(a, g);
    while norm(f) > 1e-14 && iterations < MAX_SOLVER_ITERATIONS {
        iterations += 1;
        let (da, dg) = hamiltonian_gradient(a, g, l2);
        let j = [[a / (g * target_r), -(a + 1.0) / (g * target_r)], [a * da / e_target, g * dg / e_target]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let s0 = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let s1 = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let (a_new, g_new) = (a * (-lambda * s0).exp(), g * (-lambda * s1).exp());
            let f_new = resid(a_new, g_new);
            if norm(f_new) < norm(f) {
                a = a_new;
                g = g_new;
                f = f_new;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm(f) > SOLVER_TOLERANCE || !a.is_finite() || !g.is_finite() {
        return Err(Error::Solver { iterations, residual: norm(f) });
    }
    Ok((a, g))
}

/// Residuals `(⟨r⟩/r_out - 1, ⟨H⟩/E_n̄ - 1)` of the two defining conditions.
pub fn build_residuals(p: &EssParams, spec: &PhysicalSpec) -> Result<(f64, f64)> {
    let ex = ess_expectations(p)?;
    Ok((ex.r / r_out(spec.n_bar, spec.l_bar as f64)? - 1.0, ex.h / spec.energy() - 1.0))
}

/// Amplitude `Ψ(r, φ) = ψ(r) χ(φ)`, normalized under `r dr dφ`.
pub fn ess_eval(p: &EssParams, r: f64, phi: f64) -> Result<Complex64> {
    Ok(rss_eval(&p.radial(), r)? * css_eval(&p.angular(), phi)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssExpectations {
    pub r: f64,
    pub r2: f64,
    pub pr: f64,
    pub pr2: f64,
    pub sin: f64,
    pub cos: f64,
    pub l: f64,
    pub l2: f64,
    pub h: f64,
    pub dr_dpr: f64,
    pub dsin_dl: f64,
    pub dcos_dl: f64,
}

/// Closed-form expectations of the packet at `t = 0`.
pub fn ess_expectations(p: &EssParams) -> Result<EssExpectations> {
    let rad = rss_expectations(&p.radial())?;
    let ang = css_expectations(&p.angular())?;
    Ok(EssExpectations {
        r: rad.r,
        r2: rad.r2,
        pr: rad.pr,
        pr2: rad.pr2,
        sin: ang.sin,
        cos: ang.cos,
        l: ang.l,
        l2: ang.l2,
        h: hamiltonian_expectation(p.alpha, p.gamma0, p.gamma1, ang.l2),
        dr_dpr: rad.dr_dpr,
        dsin_dl: ang.dsin * ang.dl,
        dcos_dl: ang.dcos * ang.dl,
    })
}
