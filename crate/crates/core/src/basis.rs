//! Bound radial eigenfunctions of Coulomb-like planar problems,
//! `R(r) = N x^λ e^{-x/2} L_d^{2λ}(x)` with `x = 2r/ν`, normalized under `r dr`.

use crate::quad::{panel_breaks, Rule};
use crate::specfun::{laguerre_scaled_unchecked, ln_gamma_unchecked};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct RadialLevel {
    /// Effective `n - 1/2`; the energy is `-1/(2ν²)`.
    pub nu: f64,
    /// Effective angular exponent, `> -1/2`.
    pub lambda: f64,
    /// Number of radial nodes.
    pub degree: usize,
    ln_norm: f64,
}

impl RadialLevel {
    /// `ν = d + λ + 1/2` is required for the function to be an eigenstate.
    pub fn new(lambda: f64, degree: usize) -> RadialLevel {
        let nu = degree as f64 + lambda + 0.5;
        let d = degree as f64;
        let ln_norm = (2.0 / nu).ln()
            + 0.5 * (ln_gamma_unchecked(d + 1.0) - ln_gamma_unchecked(d + 2.0 * lambda + 1.0) - (2.0 * nu).ln());
        RadialLevel { nu, lambda, degree, ln_norm }
    }

    pub fn hydrogenic(n: i64, l: i64) -> RadialLevel {
        let big_l = l.unsigned_abs() as usize;
        RadialLevel::new(big_l as f64, n as usize - big_l - 1)
    }

    pub fn energy(&self) -> f64 {
        -0.5 / (self.nu * self.nu)
    }

    pub fn ln_norm(&self) -> f64 {
        self.ln_norm
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = 2.0 * r / self.nu;
        let (m, s) = laguerre_scaled_unchecked(self.degree, 2.0 * self.lambda, x);
        if r == 0.0 {
            return if self.lambda == 0.0 {
                self.ln_norm.exp() * m * s.exp()
            } else if self.lambda > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        if m == 0.0 {
            return 0.0;
        }
        m.signum() * (self.ln_norm + self.lambda * x.ln() - 0.5 * x + m.abs().ln() + s).exp()
    }

    /// Radius beyond which the function is negligible (`~e^{-40}` of its scale).
    pub fn extent(&self) -> f64 {
        2.0 * self.nu * self.nu + 60.0 * self.nu + 50.0
    }
}

/// Quadrature rule resolving bound functions with `ν ≤ ν_max` on `[0, r_max]`;
/// panels grow like the local de Broglie wavelength `π √(2r)`.
pub(crate) fn eigen_rule(r_max: f64) -> Rule {
    let mut breaks = panel_breaks(0.0, 1.0, 1.0);
    let mut r = 1.0;
    while r < r_max {
        r += (2.0 * (2.0 * r).sqrt()).max(1.0);
        breaks.push(r.min(r_max));
    }
    breaks.dedup();
    Rule::composite(&breaks, 20)
}
