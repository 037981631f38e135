//! Eigenstate expansion, time evolution, grid reconstruction and observables.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::EssParams;
use crate::angular::{css_expectations, fourier_amplitudes};
use crate::basis::{eigen_rule, RadialLevel};
use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::quad::Rule;
use crate::radial::{rss_eval_unchecked, RssParams};
use crate::specfun::ln_gamma_unchecked;

/// Largest principal quantum number an expansion window may reach.
pub const MAX_N: i64 = 400;
/// Closed-form radial overlaps with a larger absolute error bound fall back to quadrature.
const CLOSED_FORM_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub n_min: i64,
    pub n_max: i64,
    pub l_min: i64,
    pub l_max: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    Hydrogenic,
    Sqdt,
}

/// One retained expansion coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub n: i64,
    pub l: i64,
    pub c: Complex64,
    pub energy: f64,
    #[serde(skip)]
    pub(crate) level: RadialLevel,
}

/// Windowed expansion `Ψ(t) = Σ c_{nl} e^{-iE t} R_{nl}(r) e^{ilφ}/√(2π)`.
///
/// Coefficients are sorted by `(n, l)`; `c` already carries the phase of time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralState {
    window: Window,
    coeffs: Vec<Coefficient>,
    t: f64,
    tail_mass: f64,
    basis: BasisKind,
}

impl SpectralState {
    pub(crate) fn from_parts(window: Window, coeffs: Vec<Coefficient>, basis: BasisKind) -> Self {
        let norm: f64 = coeffs.iter().map(|c| c.c.norm_sqr()).sum();
        SpectralState { window, coeffs, t: 0.0, tail_mass: (1.0 - norm).max(0.0), basis }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coeffs
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    /// Coefficient for `(n, l)` if retained.
    pub fn get(&self, n: i64, l: i64) -> Option<Complex64> {
        self.coeffs.binary_search_by(|c| (c.n, c.l).cmp(&(n, l))).ok().map(|i| self.coeffs[i].c)
    }

    /// `Σ |c|²`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.c.norm_sqr()).sum()
    }

    /// `Σ |c|² E`.
    pub fn energy_expectation(&self) -> f64 {
        self.coeffs.iter().map(|c| c.c.norm_sqr() * c.energy).sum()
    }

    /// `(Σ|c|² l, Σ|c|² l²)`.
    pub fn l_moments(&self) -> (f64, f64) {
        self.coeffs.iter().fold((0.0, 0.0), |(a, b), c| {
            let w = c.c.norm_sqr();
            let l = c.l as f64;
            (a + w * l, b + w * l * l)
        })
    }

    /// `|⟨Ψ(t)|Ψ(t+τ)⟩|²`.
    pub fn autocorrelation(&self, tau: f64) -> f64 {
        self.coeffs.iter().map(|c| Complex64::from_polar(c.c.norm_sqr(), -c.energy * tau)).sum::<Complex64>().norm_sqr()
    }

    /// Advances the state by `dt`: each coefficient gains the phase `e^{-iE dt}`.
    pub fn evolve(&self, dt: f64) -> SpectralState {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| Coefficient { c: c.c * Complex64::from_polar(1.0, -c.energy * dt), ..*c })
            .collect();
        SpectralState { coeffs, t: self.t + dt, ..self.clone() }
    }
}

/// Advances `s` by `t` atomic units.
pub fn evolve(s: &SpectralState, t: f64) -> SpectralState {
    s.evolve(t)
}

pub(crate) struct ExpansionCenter {
    pub n: i64,
    pub n_margin: i64,
    pub l_margin: i64,
}

impl ExpansionCenter {
    pub fn for_params(p: &EssParams, n_bar: Option<f64>) -> Result<Self> {
        let n_bar = match n_bar.or(p.spec().map(|s| s.n_bar)) {
            Some(n) => n,
            None => {
                let h = super::ess_expectations(p)?.h;
                if h >= 0.0 {
                    return Err(Error::domain("packet energy is not negative; no bound expansion"));
                }
                0.5 + 1.0 / (-2.0 * h).sqrt()
            }
        };
        let dl = css_expectations(&p.angular())?.dl;
        Ok(ExpansionCenter { n: n_bar.round() as i64, n_margin: 10, l_margin: ((6.0 * dl).ceil() as i64).max(1) })
    }
}

/// Hydrogenic expansion of the packet, grown until `1 - Σ|c|² ≤ tol`.
pub fn expand(p: &EssParams, tol: f64) -> Result<SpectralState> {
    let center = ExpansionCenter::for_params(p, None)?;
    let rad = p.radial();
    let rule = rad.rule();
    expand_with(
        p,
        tol,
        center,
        |n, l| Ok((l.abs() < n).then(|| RadialLevel::hydrogenic(n, l))),
        |n, l, level| hydrogenic_overlap(&rad, n, l.abs(), level, &rule),
        BasisKind::Hydrogenic,
    )
}

/// Coefficient `c_{nl}` of the packet on the hydrogenic eigenstate `(n, l)`.
pub fn expansion_coefficient(p: &EssParams, n: i64, l: i64) -> Result<Complex64> {
    if n < 1 || l.abs() >= n {
        return Err(Error::domain(format!("invalid quantum numbers n = {n}, l = {l}")));
    }
    let rad = p.radial();
    let level = RadialLevel::hydrogenic(n, l);
    let radial = hydrogenic_overlap(&rad, n, l.abs(), &level, &rad.rule())?;
    Ok(radial * fourier_amplitudes(&p.angular(), l, l)?[0])
}

pub(crate) fn expand_with(
    p: &EssParams,
    tol: f64,
    center: ExpansionCenter,
    level_of: impl Fn(i64, i64) -> Result<Option<RadialLevel>> + Sync,
    radial_overlap: impl Fn(i64, i64, &RadialLevel) -> Result<Complex64> + Sync,
    basis: BasisKind,
) -> Result<SpectralState> {
    if !(tol > 0.0) || tol >= 1.0 {
        return Err(Error::domain(format!("tail tolerance must lie in (0, 1), got {tol}")));
    }
    let ang = p.angular();
    let beta = p.beta();
    // The angular factor is exact, so the l window is fixed first from its own tail.
    let mut l_margin = center.l_margin;
    let mut amps = fourier_amplitudes(&ang, beta - l_margin, beta + l_margin)?;
    while 1.0 - amps.iter().map(|a| a * a).sum::<f64>() > 0.1 * tol && l_margin < 64 * center.l_margin {
        l_margin *= 2;
        amps = fourier_amplitudes(&ang, beta - l_margin, beta + l_margin)?;
    }
    let (l_min, l_max) = (beta - l_margin, beta + l_margin);
    let abs_ls: std::collections::BTreeSet<i64> = (l_min..=l_max).map(i64::abs).collect();

    // Radial overlaps depend on (n, |l|) only and are kept across window growth.
    let mut table: BTreeMap<(i64, i64), Option<(RadialLevel, Complex64)>> = BTreeMap::new();
    let mut n_margin = center.n_margin;
    loop {
        let n_min = (center.n - n_margin).max(1);
        let n_max = (center.n + n_margin).min(MAX_N);
        let keys: Vec<(i64, i64)> = (n_min..=n_max)
            .flat_map(|n| abs_ls.iter().map(move |&l| (n, l)))
            .filter(|k| !table.contains_key(k))
            .collect();
        let radial: Vec<Option<(RadialLevel, Complex64)>> = keys
            .par_iter()
            .map(|&(n, big_l)| -> Result<Option<(RadialLevel, Complex64)>> {
                match level_of(n, big_l)? {
                    Some(level) => Ok(Some((level, radial_overlap(n, big_l, &level)?))),
                    None => Ok(None),
                }
            })
            .collect::<Result<_>>()?;
        table.extend(keys.into_iter().zip(radial));

        let mut coeffs = Vec::new();
        for n in n_min..=n_max {
            for l in l_min..=l_max {
                let Some(Some((level_abs, overlap))) = table.get(&(n, l.abs())) else { continue };
                let level = if l < 0 { level_of(n, l)?.unwrap_or(*level_abs) } else { *level_abs };
                let a = amps[(l - l_min) as usize];
                coeffs.push(Coefficient { n, l, c: overlap * a, energy: level.energy(), level });
            }
        }
        let state = SpectralState::from_parts(Window { n_min, n_max, l_min, l_max }, coeffs, basis);
        if state.tail_mass <= tol {
            return Ok(state);
        }
        if n_max == MAX_N {
            return Err(Error::Truncation { n_max, tail_mass: state.tail_mass, tol });
        }
        n_margin *= 2;
    }
}

/// Radial overlap `∫ R_{nL} ψ r dr`: closed form when its cancellation is
/// controlled, otherwise quadrature.
pub(crate) fn hydrogenic_overlap(
    p: &RssParams,
    n: i64,
    big_l: i64,
    level: &RadialLevel,
    rule: &Rule,
) -> Result<Complex64> {
    let (value, err) = closed_form_overlap(p, n, big_l, level);
    if err <= CLOSED_FORM_TOLERANCE && value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Ok(quadrature_overlap(p, level, rule))
    }
}

/// Closed-form overlap with an absolute error bound.
///
/// The finite alternating sum is accumulated relative to its first term in
/// double-double arithmetic; the prefactor stays in log space.
pub(crate) fn closed_form_overlap(p: &RssParams, n: i64, big_l: i64, level: &RadialLevel) -> (Complex64, f64) {
    let a = p.alpha();
    let nf = n as f64;
    let lf = big_l as f64;
    let deg = (n - big_l - 1) as usize;

    let k = Dd::ONE / Dd::new(nf - 0.5);
    let z = CDd::new(k + Dd::new(p.gamma0()), Dd::new(p.gamma1()));
    let w = CDd::new(-(k + k), Dd::ZERO) / z;

    let mut rho = CDd::ONE;
    let mut sum = CDd::ONE;
    let mut abs_sum = 1.0;
    for q in 0..deg {
        let qf = q as f64;
        let num = (Dd::new(a) + Dd::new(lf + qf + 2.0)) * Dd::new((deg - q) as f64);
        let den = Dd::new(qf + 1.0) * Dd::new(qf + 2.0 * lf + 1.0);
        rho = (rho * w).scale(num / den);
        sum = sum + rho;
        abs_sum += rho.norm_sqr().to_f64().sqrt();
    }

    let kf = 1.0 / (nf - 0.5);
    let zf = Complex64::new(kf + p.gamma0(), p.gamma1());
    let power = a + lf + 2.0;
    let ln_t0 = level.ln_norm() + p.ln_norm() + ln_gamma_unchecked(nf + lf)
        - ln_gamma_unchecked(nf - lf)
        - ln_gamma_unchecked(2.0 * lf + 1.0)
        + lf * (2.0 * kf).ln()
        + ln_gamma_unchecked(power)
        - power * zf.norm().ln();
    let phase = -power * zf.im.atan2(zf.re);
    let s = sum.to_c64();
    let value = if s.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar((ln_t0 + s.norm().ln()).exp(), phase + s.arg())
    };
    let err = (ln_t0 + abs_sum.ln()).exp() * (deg as f64 + 2.0) * 1e-31;
    (value, err)
}

pub(crate) fn quadrature_overlap(p: &RssParams, level: &RadialLevel, rule: &Rule) -> Complex64 {
    rule.integrate_c(|r| rss_eval_unchecked(p, r) * (level.eval(r) * r))
}

/// Samples `r |Ψ|²` on a polar grid, stored row-major as `values[i_r * n_phi + i_phi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridField {
    pub r_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl GridField {
    pub fn value(&self, i_r: usize, i_phi: usize) -> f64 {
        self.values[i_r * self.phi_grid.len() + i_phi]
    }

    /// Trapezoid integral of the samples (periodic in φ).
    pub fn mass(&self) -> f64 {
        let nphi = self.phi_grid.len();
        let hphi = 2.0 * std::f64::consts::PI / nphi as f64;
        let mut total = 0.0;
        for i in 0..self.r_grid.len().saturating_sub(1) {
            let dr = self.r_grid[i + 1] - self.r_grid[i];
            let row0: f64 = self.values[i * nphi..(i + 1) * nphi].iter().sum();
            let row1: f64 = self.values[(i + 1) * nphi..(i + 2) * nphi].iter().sum();
            total += 0.5 * dr * (row0 + row1) * hphi;
        }
        total
    }

    /// Grid indices `(i_r, i_phi)` of the largest sample.
    pub fn argmax(&self) -> (usize, usize) {
        let nphi = self.phi_grid.len();
        let (i, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        (i / nphi, i % nphi)
    }
}

/// `‖a - b‖ / ‖a‖` over the samples of two fields on the same grid.
pub fn grid_distance(a: &GridField, b: &GridField) -> Result<f64> {
    if a.r_grid != b.r_grid || a.phi_grid != b.phi_grid {
        return Err(Error::domain("grid fields are sampled on different grids"));
    }
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = a.values.iter().map(|x| x * x).sum();
    Ok((num / den).sqrt())
}

/// Sums the expansion on a polar grid at the state's current time.
pub fn reconstruct(s: &SpectralState, r_grid: &[f64], phi_grid: &[f64]) -> Result<GridField> {
    if r_grid.is_empty() || phi_grid.is_empty() {
        return Err(Error::domain("reconstruction grids must be non-empty"));
    }
    if r_grid.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) || phi_grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("grid radii must be finite and >= 0"));
    }
    let blocks = blocks_by_l(s);
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let phases: Vec<Vec<Complex64>> = blocks
        .iter()
        .map(|(l, _)| phi_grid.iter().map(|&phi| Complex64::from_polar(inv_sqrt_2pi, *l as f64 * phi)).collect())
        .collect();
    let nphi = phi_grid.len();
    let rows: Vec<Vec<f64>> = r_grid
        .par_iter()
        .map(|&r| {
            let mut psi = vec![Complex64::new(0.0, 0.0); nphi];
            for ((_, entries), ph) in blocks.iter().zip(&phases) {
                let f: Complex64 = entries.iter().map(|e| e.c * e.level.eval(r)).sum();
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (v, p) in psi.iter_mut().zip(ph) {
                    *v += f * p;
                }
            }
            psi.into_iter().map(|v| r * v.norm_sqr()).collect()
        })
        .collect();
    Ok(GridField { r_grid: r_grid.to_vec(), phi_grid: phi_grid.to_vec(), values: rows.concat(), t: s.t })
}

fn blocks_by_l(s: &SpectralState) -> Vec<(i64, Vec<Coefficient>)> {
    let mut map: BTreeMap<i64, Vec<Coefficient>> = BTreeMap::new();
    for c in &s.coeffs {
        map.entry(c.l).or_default().push(*c);
    }
    map.into_iter().collect()
}

/// Expectations at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub r: f64,
    pub cos: f64,
    pub sin: f64,
    pub autocorrelation: f64,
}

/// `⟨r⟩`, `⟨cosφ⟩`, `⟨sinφ⟩` and the autocorrelation at `s.t() + τ` for each `τ`
/// in `times`, from coefficient-space matrix elements.
pub fn observables_vs_time(s: &SpectralState, times: &[f64]) -> Result<Vec<Observables>> {
    let blocks = blocks_by_l(s);
    let r_max = s.coeffs.iter().map(|c| c.level.extent()).fold(0.0, f64::max);
    let rule = eigen_rule(r_max);
    let tables: Vec<Vec<Vec<f64>>> = blocks
        .par_iter()
        .map(|(_, entries)| entries.iter().map(|e| rule.nodes.iter().map(|&r| e.level.eval(r)).collect()).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64], power: i32| -> f64 {
        a.iter()
            .zip(b)
            .zip(rule.nodes.iter().zip(&rule.weights))
            .map(|((x, y), (r, w))| x * y * w * r.powi(1 + power))
            .sum()
    };
    // ⟨R_a| r |R_b⟩ within each l, and ⟨R_{l+1}|R_l⟩ between neighbours.
    let r_mats: Vec<Vec<Vec<f64>>> =
        tables.par_iter().map(|tab| tab.iter().map(|a| tab.iter().map(|b| dot(a, b, 1)).collect()).collect()).collect();
    let shift_mats: Vec<Option<Vec<Vec<f64>>>> = (0..blocks.len())
        .into_par_iter()
        .map(|i| {
            let j = i + 1;
            if j < blocks.len() && blocks[j].0 == blocks[i].0 + 1 {
                Some(tables[j].iter().map(|a| tables[i].iter().map(|b| dot(a, b, 0)).collect()).collect())
            } else {
                None
            }
        })
        .collect();

    let out = times
        .iter()
        .map(|&tau| {
            let phased: Vec<Vec<Complex64>> = blocks
                .iter()
                .map(|(_, es)| es.iter().map(|e| e.c * Complex64::from_polar(1.0, -e.energy * tau)).collect())
                .collect();
            let mut r = 0.0;
            let mut x = Complex64::new(0.0, 0.0);
            for (i, c) in phased.iter().enumerate() {
                for (a, ca) in c.iter().enumerate() {
                    for (b, cb) in c.iter().enumerate() {
                        r += (ca.conj() * cb).re * r_mats[i][a][b];
                    }
                }
                if let Some(m) = &shift_mats[i] {
                    for (a, ca) in phased[i + 1].iter().enumerate() {
                        for (b, cb) in c.iter().enumerate() {
                            x += ca.conj() * cb * m[a][b];
                        }
                    }
                }
            }
            Observables { t: s.t + tau, r, cos: x.re, sin: x.im, autocorrelation: s.autocorrelation(tau) }
        })
        .collect();
    Ok(out)
}
