//! Quantum-defect extension: alkali-like Rydberg series with `n* = n − δ(|l|)`,
//! eigenfunctions of the matching effective potential, and packets built and
//! evolved in that basis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::angular::{css_expectations, delta_from_spread, CssParams};
use crate::basis::RadialLevel;
use crate::classical::{outer_apsis, planar_energy};
use crate::error::{Error, Result};
use crate::ess::{
    expand_with, quadrature_overlap, solve_radial, BasisKind, EssParams, ExpansionCenter, PhysicalSpec, SpectralState,
};
use crate::radial::{oscillator_uncertainty_scaled, OscillatorUncertainty, RssParams};

/// Asymptotic quantum defects `δ(|l|)` and integer shifts `I(|l|)`; absent entries are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumDefectTable {
    #[serde(default)]
    defects: BTreeMap<u32, f64>,
    #[serde(default)]
    shifts: BTreeMap<u32, i64>,
}

impl QuantumDefectTable {
    pub fn new(defects: BTreeMap<u32, f64>, shifts: BTreeMap<u32, i64>) -> Result<Self> {
        let t = QuantumDefectTable { defects, shifts };
        t.validate()?;
        Ok(t)
    }

    /// All defects zero: the hydrogenic series.
    pub fn zero() -> Self {
        QuantumDefectTable::default()
    }

    /// Lithium `s` and `p` defects.
    pub fn lithium() -> Self {
        QuantumDefectTable { defects: BTreeMap::from([(0, 0.40), (1, 0.05)]), shifts: BTreeMap::new() }
    }

    /// Parses `{"defects": {"0": 0.40}, "shifts": {"0": 0}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let t: QuantumDefectTable =
            serde_json::from_str(text).map_err(|e| Error::domain(format!("invalid defect table: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for (l, d) in &self.defects {
            if !(0.0..1.0).contains(d) {
                return Err(Error::domain(format!("defect for |l| = {l} must lie in [0, 1), got {d}")));
            }
        }
        Ok(())
    }

    pub fn defect(&self, l_abs: u32) -> f64 {
        self.defects.get(&l_abs).copied().unwrap_or(0.0)
    }

    pub fn shift(&self, l_abs: u32) -> i64 {
        self.shifts.get(&l_abs).copied().unwrap_or(0)
    }

    /// Every defect multiplied by `s`; shifts unchanged.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let defects = self.defects.iter().map(|(&l, &d)| (l, d * s)).collect();
        QuantumDefectTable::new(defects, self.shifts.clone())
    }
}

/// Effective quantum numbers `n* = n − δ(|l|)`, `l* = |l| − δ(|l|) + I(|l|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarredQuantum {
    pub n_star: f64,
    pub l_star: f64,
}

/// Starred quantum numbers of `(n, l)`.
pub fn starred(n: i64, l: i64, table: &QuantumDefectTable) -> Result<StarredQuantum> {
    check_quantum_numbers(n, l)?;
    let la = l.unsigned_abs() as u32;
    let d = table.defect(la);
    Ok(StarredQuantum { n_star: n as f64 - d, l_star: la as f64 - d + table.shift(la) as f64 })
}

fn check_quantum_numbers(n: i64, l: i64) -> Result<()> {
    if n < 1 || l.abs() > n - 1 {
        return Err(Error::domain(format!("invalid quantum numbers n = {n}, l = {l}")));
    }
    Ok(())
}

/// `E = −1/(2(n* − ½)²)`.
pub fn sqdt_energy(n: i64, l: i64, table: &QuantumDefectTable) -> Result<f64> {
    Ok(planar_energy(starred(n, l, table)?.n_star))
}

/// Radial eigenfunction with exponent `l*` and `n − |l| − 1 − I` nodes, so
/// that its energy is exactly [`sqdt_energy`].
pub(crate) fn sqdt_level(n: i64, l: i64, table: &QuantumDefectTable) -> Result<RadialLevel> {
    let s = starred(n, l, table)?;
    let la = l.abs();
    let degree = n - la - 1 - table.shift(la as u32);
    if degree < 0 || s.l_star <= -0.5 {
        return Err(Error::domain(format!(
            "no normalizable eigenstate for n = {n}, l = {l} (l* = {}, nodes = {degree})",
            s.l_star
        )));
    }
    Ok(RadialLevel::new(s.l_star, degree as usize))
}

/// `R_{n*l*}(r)`, normalized under `r dr`.
pub fn sqdt_eigenstate(n: i64, l: i64, table: &QuantumDefectTable, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be > 0, got {r}")));
    }
    Ok(sqdt_level(n, l, table)?.eval(r))
}

/// Expansion of the packet in the defect eigenbasis, grown until `1 − Σ|c|² ≤ tol`.
pub fn sqdt_expand(p: &EssParams, table: &QuantumDefectTable, tol: f64) -> Result<SpectralState> {
    let center = ExpansionCenter::for_params(p, None)?;
    let rad = p.radial();
    let rule = rad.rule();
    expand_with(
        p,
        tol,
        center,
        |n, l| if l.abs() < n { sqdt_level(n, l, table).map(Some) } else { Ok(None) },
        |_, _, level| Ok(quadrature_overlap(&rad, level, &rule)),
        BasisKind::Sqdt,
    )
}

/// `Σ |c|² E_{n*}` with energies taken from `table`.
pub fn sqdt_hamiltonian_expectation(s: &SpectralState, table: &QuantumDefectTable) -> Result<f64> {
    s.coefficients().iter().map(|c| Ok(c.c.norm_sqr() * sqdt_energy(c.n, c.l, table)?)).sum()
}

/// Energy target used by [`sqdt_build`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyTarget {
    /// `Σ|c̃|² E_{n*} = E_{n̄*}` through the defect-basis expansion.
    #[default]
    Expansion,
    /// Hydrogenic `⟨H⟩ = E_{n̄*}` without the expansion.
    Hydrogenic,
}

const MAX_FIXED_POINT: usize = 50;
const FIXED_POINT_TOLERANCE: f64 = 1e-8;
const BUILD_EXPANSION_TOL: f64 = 1e-10;

/// Outer apsis of the precessing ellipse, with both mean quantum numbers starred.
pub fn sqdt_outer_apsis(spec: &PhysicalSpec, table: &QuantumDefectTable) -> Result<f64> {
    let la = spec.l_bar.unsigned_abs() as u32;
    let d = table.defect(la);
    outer_apsis(spec.n_bar - d, spec.l_bar as f64 - d + table.shift(la) as f64)
}

/// Packet at the outer apsis of the precessing ellipse with energy `E_{n̄*}`.
pub fn sqdt_build(spec: &PhysicalSpec, table: &QuantumDefectTable, target: EnergyTarget) -> Result<EssParams> {
    spec.validate()?;
    let la = spec.l_bar.unsigned_abs() as u32;
    let e_star = planar_energy(spec.n_bar - table.defect(la));
    let r_star = sqdt_outer_apsis(spec, table)?;
    let delta = delta_from_spread(spec.dl)?;
    let l2 = css_expectations(&CssParams::new(delta, spec.l_bar, 0.0)?)?.l2;
    let nu = spec.n_bar - table.defect(la) - 0.5;
    let make = |e_h: f64| -> Result<EssParams> {
        let (alpha, gamma0) = solve_radial(r_star, e_h, l2, nu)?;
        Ok(EssParams::new(alpha, spec.l_bar, gamma0, 0.0, delta)?.with_spec(*spec))
    };
    let mut e_h = e_star;
    let mut p = make(e_h)?;
    if target == EnergyTarget::Hydrogenic {
        return Ok(p);
    }
    for iteration in 0..MAX_FIXED_POINT {
        let s = sqdt_expand(&p, table, BUILD_EXPANSION_TOL)?;
        let h = sqdt_hamiltonian_expectation(&s, table)? / s.norm();
        let miss = e_star - h;
        if (miss / e_star).abs() <= FIXED_POINT_TOLERANCE {
            return Ok(p);
        }
        e_h += miss;
        if !(e_h < 0.0) {
            return Err(Error::Solver { iterations: iteration + 1, residual: miss / e_star });
        }
        p = make(e_h)?;
    }
    let s = sqdt_expand(&p, table, BUILD_EXPANSION_TOL)?;
    let h = sqdt_hamiltonian_expectation(&s, table)? / s.norm();
    Err(Error::Solver { iterations: MAX_FIXED_POINT, residual: (e_star - h) / e_star })
}

/// Oscillator relation in the effective potential: `P` carries `1/f` with `f = |l*|/|l|`.
pub fn sqdt_oscillator_uncertainty(p: &RssParams, l: i64, table: &QuantumDefectTable) -> Result<OscillatorUncertainty> {
    if l == 0 {
        return Err(Error::domain("the defect oscillator relation needs l != 0"));
    }
    let la = l.unsigned_abs() as u32;
    let l_star = la as f64 - table.defect(la) + table.shift(la) as f64;
    let f = l_star.abs() / la as f64;
    if f == 0.0 {
        return Err(Error::domain(format!("l* vanishes for |l| = {la}")));
    }
    oscillator_uncertainty_scaled(p, f)
}
