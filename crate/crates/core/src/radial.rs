//! Planar radial squeezed states `ψ(r) = N₁ r^α exp(-(γ₀ + iγ₁) r)`.
//!
//! All radial inner products use the planar weight `r dr`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{panel_breaks, Rule};
use crate::specfun::ln_gamma_unchecked;

/// Radial packet shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RssParams {
    alpha: f64,
    gamma0: f64,
    gamma1: f64,
}

impl RssParams {
    /// Requires `α > 0`, `γ₀ > 0` and finite `γ₁`.
    pub fn new(alpha: f64, gamma0: f64, gamma1: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
        }
        if !gamma0.is_finite() || gamma0 <= 0.0 {
            return Err(Error::domain(format!("gamma0 must be > 0, got {gamma0}")));
        }
        if !gamma1.is_finite() {
            return Err(Error::domain("gamma1 must be finite"));
        }
        Ok(RssParams { alpha, gamma0, gamma1 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// `ln N₁` with `N₁ = (2γ₀)^{α+1} / Γ(2α+2)^{1/2}`, normalizing under `r dr`.
    pub fn ln_norm(&self) -> f64 {
        (self.alpha + 1.0) * (2.0 * self.gamma0).ln() - 0.5 * ln_gamma_unchecked(2.0 * self.alpha + 2.0)
    }

    /// `ln` of the constant normalizing the same profile under plain `dr`.
    pub fn ln_norm_dr(&self) -> f64 {
        (self.alpha + 0.5) * (2.0 * self.gamma0).ln() - 0.5 * ln_gamma_unchecked(2.0 * self.alpha + 1.0)
    }

    /// `⟨r^k⟩ = Γ(2α+2+k) / (Γ(2α+2) (2γ₀)^k)`, defined for `2α + 2 + k > 0`.
    pub fn moment(&self, k: f64) -> Result<f64> {
        let s = 2.0 * self.alpha + 2.0;
        if s + k <= 0.0 {
            return Err(Error::domain(format!("moment <r^{k}> diverges for alpha = {}", self.alpha)));
        }
        Ok((ln_gamma_unchecked(s + k) - ln_gamma_unchecked(s) - k * (2.0 * self.gamma0).ln()).exp())
    }

    /// Composite Gauss–Legendre rule covering the bulk of `r |ψ|²`.
    pub(crate) fn rule(&self) -> Rule {
        let (lo, hi, width) = self.support();
        Rule::composite(&panel_breaks(lo, hi, width), 20)
    }

    /// Interval outside of which `r |ψ|²` is below `e^{-90}` of its peak, and a panel width.
    pub(crate) fn support(&self) -> (f64, f64, f64) {
        // In x = 2γ₀ r the density is x^{s} e^{-x} with s = 2α + 1.
        let s = 2.0 * self.alpha + 1.0;
        let drop = 90.0;
        let peak = s.max(1e-300);
        let logf = |x: f64| s * (x / peak).ln() - (x - peak);
        let mut hi = peak + 1.0;
        while logf(hi) > -drop {
            hi = peak + 2.0 * (hi - peak);
        }
        let mut a = peak;
        let mut b = hi;
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if logf(m) > -drop {
                a = m;
            } else {
                b = m;
            }
        }
        let x_hi = b;
        let x_lo = if logf(peak * 1e-12) > -drop {
            0.0
        } else {
            let (mut a, mut b) = (peak * 1e-12, peak);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if logf(m) > -drop {
                    b = m;
                } else {
                    a = m;
                }
            }
            // Inverse-power weights lift the inner tail, so only cut far from the origin.
            if a < 0.5 * peak {
                0.0
            } else {
                a
            }
        };
        let width = 0.5 * (s + 1.0).sqrt();
        let scale = 1.0 / (2.0 * self.gamma0);
        (x_lo * scale, x_hi * scale, width * scale)
    }
}

/// Amplitude `ψ(r)`.
pub fn rss_eval(p: &RssParams, r: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be > 0, got {r}")));
    }
    Ok(rss_eval_unchecked(p, r))
}

pub(crate) fn rss_eval_unchecked(p: &RssParams, r: f64) -> Complex64 {
    let modulus = (p.ln_norm() + p.alpha * r.ln() - p.gamma0 * r).exp();
    Complex64::from_polar(modulus, -p.gamma1 * r)
}

/// Parameters from squeezing `S`, `⟨1/r⟩` and `⟨p_r⟩`.
pub fn rss_from_moments(s: f64, inv_r: f64, pr: f64) -> Result<RssParams> {
    if !s.is_finite() || s <= 0.0 || s >= 2.0 {
        return Err(Error::InvalidSqueezing(s));
    }
    if !inv_r.is_finite() || inv_r <= 0.0 {
        return Err(Error::domain(format!("<1/r> must be > 0, got {inv_r}")));
    }
    RssParams::new(1.0 / s - 0.5, inv_r / s, -pr)
}

/// Squeezing `S = ⟨1/r⟩ / γ₀ = 2 / (2α + 1)`.
pub fn rss_squeezing(p: &RssParams) -> f64 {
    2.0 / (2.0 * p.alpha + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RssExpectations {
    pub r: f64,
    pub r2: f64,
    pub pr: f64,
    pub pr2: f64,
    pub inv_r: f64,
    pub inv_r2: f64,
    pub dr: f64,
    pub dpr: f64,
    pub dr_dpr: f64,
}

/// Closed-form radial expectations; `p_r = -i(∂_r + 1/2r)`.
pub fn rss_expectations(p: &RssParams) -> Result<RssExpectations> {
    let (a, g0, g1) = (p.alpha, p.gamma0, p.gamma1);
    let dr = ((a + 1.0) / 2.0).sqrt() / g0;
    let dpr = g0 / (2.0 * a).sqrt();
    Ok(RssExpectations {
        r: (a + 1.0) / g0,
        r2: (a + 1.0) * (2.0 * a + 3.0) / (2.0 * g0 * g0),
        pr: -g1,
        pr2: g0 * g0 / (2.0 * a) + g1 * g1,
        inv_r: 2.0 * g0 / (2.0 * a + 1.0),
        inv_r2: 2.0 * g0 * g0 / (a * (2.0 * a + 1.0)),
        dr,
        dpr,
        dr_dpr: 0.5 * ((a + 1.0) / a).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscillatorUncertainty {
    pub d_r_osc: f64,
    pub d_p_osc: f64,
    pub bound: f64,
    pub residual: f64,
}

/// `ΔR ΔP` against `½⟨1/r²⟩` for `R = 1/r - const`, `P = -i(∂_r + 1/2r)`.
pub fn rss_oscillator_uncertainty(p: &RssParams) -> Result<OscillatorUncertainty> {
    oscillator_uncertainty_scaled(p, 1.0)
}

/// Oscillator relation with `P` divided by `f`; the bound becomes `⟨1/r²⟩ / 2f`.
pub(crate) fn oscillator_uncertainty_scaled(p: &RssParams, f: f64) -> Result<OscillatorUncertainty> {
    let ex = rss_expectations(p)?;
    let a = p.alpha;
    let d_r_osc = (2.0 * p.gamma0 * p.gamma0 / (a * (2.0 * a + 1.0).powi(2))).sqrt();
    let d_p_osc = p.gamma0 / (2.0 * a).sqrt() / f;
    let bound = 0.5 * ex.inv_r2 / f;
    Ok(OscillatorUncertainty { d_r_osc, d_p_osc, bound, residual: d_r_osc * d_p_osc - bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_packet() -> RssParams {
        RssParams::new(57.408, 0.01697, 0.0).unwrap()
    }

    /// Independent Gauss–Laguerre rule (weight `e^{-x}`), nodes by Newton on `L_n`.
    fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let nf = n as f64;
        let mut xs: Vec<f64> = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        let mut z = 0.0;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - xs[i - 2])
                }
            };
            let (mut p1, mut p2, mut pp) = (0.0, 0.0, 0.0);
            for _ in 0..100 {
                p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = (nf * p1 - nf * p2) / z;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 3e-16 * z {
                    break;
                }
            }
            let _ = p1;
            xs.push(z);
            ws.push(-1.0 / (pp * nf * p2));
        }
        (xs, ws)
    }

    /// Moment `∫ |ψ|² r^k r dr` by Gauss–Laguerre after `x = 2γ₀ r`, factoring the
    /// density as `x^{2α+1+k} e^{-x}` relative to the quadrature weight `e^{-x}`.
    fn laguerre_moment(p: &RssParams, k: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        let s = 2.0 * p.alpha + 1.0 + k;
        let ln_c = 2.0 * p.ln_norm() - (2.0 * p.alpha + 2.0 + k) * (2.0 * p.gamma0).ln();
        rule.0.iter().zip(&rule.1).map(|(&x, &w)| w * (ln_c + s * x.ln()).exp()).sum()
    }

    #[test]
    fn reference_gauss_laguerre_is_sane() {
        let rule = gauss_laguerre(40);
        let s: f64 = rule.1.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let m: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * x.powi(5)).sum();
        assert!((m - 120.0).abs() < 1e-9);
    }

    #[test]
    fn normalization_under_planar_measure() {
        let p = reference_packet();
        let rule = gauss_laguerre(180);
        assert!((laguerre_moment(&p, 0.0, &rule) - 1.0).abs() < 1e-10);
        let own = p.rule().integrate(|r| rss_eval(&p, r).unwrap().norm_sqr() * r);
        assert!((own - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_dr_constant_normalizes_under_dr() {
        let p = reference_packet();
        let shift = p.ln_norm_dr() - p.ln_norm();
        let v = p.rule().integrate(|r| (rss_eval(&p, r).unwrap().norm() * shift.exp()).powi(2));
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_of_modulus_squared() {
        let p = reference_packet();
        let peak = p.alpha() / p.gamma0();
        let f = |r: f64| rss_eval(&p, r).unwrap().norm_sqr();
        assert!(f(peak) > f(peak * (1.0 + 1e-4)) && f(peak) > f(peak * (1.0 - 1e-4)));
    }

    #[test]
    fn phase_gradient_leaves_modulus() {
        let a = RssParams::new(3.0, 0.5, 0.0).unwrap();
        let b = RssParams::new(3.0, 0.5, 0.05).unwrap();
        for &r in &[0.1, 1.0, 7.0] {
            let (x, y) = (rss_eval(&a, r).unwrap().norm(), rss_eval(&b, r).unwrap().norm());
            assert!((x - y).abs() <= 1e-15 * x);
        }
        assert!(rss_eval(&a, 0.0).is_err());
    }

    #[test]
    fn from_moments_examples() {
        let p = rss_from_moments(2.0 / 3.0, 1.0, 0.0).unwrap();
        assert!((p.alpha() - 1.0).abs() < 1e-15 && (p.gamma0() - 1.5).abs() < 1e-15 && p.gamma1() == 0.0);
        assert_eq!(rss_from_moments(0.5, 1.0, -3.0).unwrap().gamma1(), 3.0);
        assert!(matches!(rss_from_moments(2.0, 1.0, 0.0), Err(Error::InvalidSqueezing(_))));
    }

    #[test]
    fn mean_radius_near_outer_apsis() {
        let ex = rss_expectations(&reference_packet()).unwrap();
        assert!((ex.r - 3443.0).abs() < 2.0);
    }

    #[test]
    fn product_tends_to_half() {
        let big = RssParams::new(1e8, 1.0, 0.0).unwrap();
        assert!((rss_expectations(&big).unwrap().dr_dpr - 0.5).abs() < 1e-8);
    }

    /// Radial derivative by a seven-point central difference, step scaled to the
    /// local width `r / √α` of the amplitude.
    fn d_dr(p: &RssParams, r: f64) -> Complex64 {
        let h = 2e-3 * r / (p.alpha() + 1.0).sqrt();
        let f = |x: f64| rss_eval_unchecked(p, x);
        (f(r + 3.0 * h) - f(r - 3.0 * h) + (f(r - 2.0 * h) - f(r + 2.0 * h)) * 9.0 + (f(r + h) - f(r - h)) * 45.0)
            / (60.0 * h)
    }

    #[test]
    fn expectations_match_quadrature() {
        let p = RssParams::new(20.412, 0.00752, 0.0).unwrap();
        let ex = rss_expectations(&p).unwrap();
        let glr = gauss_laguerre(180);
        let m = |k: f64| laguerre_moment(&p, k, &glr);
        let rule = p.rule();
        let i = Complex64::new(0.0, 1.0);
        let ppsi = |r: f64| -i * (d_dr(&p, r) + rss_eval_unchecked(&p, r) / (2.0 * r));
        let pr = rule.integrate_c(|r| rss_eval_unchecked(&p, r).conj() * ppsi(r) * r);
        let pr2 = rule.integrate(|r| ppsi(r).norm_sqr() * r);
        let checks = [
            (ex.r, m(1.0)),
            (ex.r2, m(2.0)),
            (ex.inv_r, m(-1.0)),
            (ex.inv_r2, m(-2.0)),
            (ex.pr2, pr2),
            (ex.dr, (m(2.0) - m(1.0).powi(2)).sqrt()),
            (ex.dpr, (pr2 - pr.re * pr.re).sqrt()),
        ];
        for (k, (a, b)) in checks.iter().enumerate() {
            assert!(((a - b) / b).abs() < 1e-9, "entry {k}: {a} vs {b}");
        }
        assert!((ex.pr - pr.re).abs() < 1e-12);
    }

    #[test]
    fn momentum_is_hermitian_under_planar_measure() {
        let p = RssParams::new(6.0, 0.3, 0.2).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let v = p.rule().integrate_c(|r| {
            rss_eval_unchecked(&p, r).conj() * (-i) * (d_dr(&p, r) + rss_eval_unchecked(&p, r) / (2.0 * r)) * r
        });
        assert!(v.im.abs() < 1e-12, "{v}");
        assert!((v.re + 0.2).abs() < 1e-10);
    }

    #[test]
    fn oscillator_relation_is_saturated() {
        let p = RssParams::new(57.40808, 0.0169651, 0.0).unwrap();
        let u = rss_oscillator_uncertainty(&p).unwrap();
        assert!((u.residual / u.bound).abs() < 1e-10);
        // ΔR is Δ(1/r) whatever constant is subtracted.
        let rule = p.rule();
        let shift = 1.0 / 900.0;
        let mean = rule.integrate(|r| rss_eval_unchecked(&p, r).norm_sqr() * (1.0 / r - shift) * r);
        let var = rule.integrate(|r| rss_eval_unchecked(&p, r).norm_sqr() * (1.0 / r - shift - mean).powi(2) * r);
        assert!(((var.sqrt() - u.d_r_osc) / u.d_r_osc).abs() < 1e-9);
        // ΔP from the norm of (P - ⟨P⟩)ψ.
        let i = Complex64::new(0.0, 1.0);
        let mean_p = -p.gamma1();
        let dp2 = rule.integrate(|r| {
            let psi = rss_eval_unchecked(&p, r);
            (-i * (d_dr(&p, r) + psi / (2.0 * r)) - psi * mean_p).norm_sqr() * r
        });
        assert!(((dp2.sqrt() - u.d_p_osc) / u.d_p_osc).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn moment_identity(alpha in 0.6f64..80.0, g0 in 0.001f64..2.0) {
            let p = RssParams::new(alpha, g0, 0.0).unwrap();
            let rule = p.rule();
            for k in [-2.0, -1.0, 1.0, 2.0] {
                let q = rule.integrate(|r| rss_eval_unchecked(&p, r).norm_sqr() * r.powf(k) * r);
                let m = p.moment(k).unwrap();
                prop_assert!(((q - m) / m).abs() < 1e-9, "k = {}: {} vs {}", k, q, m);
            }
        }

        #[test]
        fn squeezing_round_trip(alpha in 0.1f64..80.0, g0 in 0.001f64..2.0, g1 in -0.5f64..0.5) {
            let p = RssParams::new(alpha, g0, g1).unwrap();
            let rule = p.rule();
            let inv_r = rule.integrate(|r| rss_eval_unchecked(&p, r).norm_sqr());
            let s = inv_r / g0;
            prop_assert!((s - rss_squeezing(&p)).abs() < 1e-9 * s);
            let ex = rss_expectations(&p).unwrap();
            let q = rss_from_moments(s, inv_r, ex.pr).unwrap();
            prop_assert!(((q.alpha() - alpha) / alpha).abs() < 1e-9);
            prop_assert!(((q.gamma0() - g0) / g0).abs() < 1e-9);
            prop_assert!((q.gamma1() - g1).abs() < 1e-12);
        }
    }
}
