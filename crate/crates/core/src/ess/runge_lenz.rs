//! Runge–Lenz uncertainties of the packet at `t = 0`.
//!
//! With `A = ½(p×L − L×p) − r̂` in the plane, `[A_x, A_y] = −2i H L`, so
//! `ΔA_x ΔA_y ≥ |⟨HL⟩|` and `Z = (ΔA_x ΔA_y − |⟨HL⟩|)/|⟨HL⟩| ≥ 0`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::{hamiltonian_expectation, EssParams};
use crate::angular::{css_eval, fourier_amplitudes};
use crate::error::{Error, Result};
use crate::quad::{periodic_grid, UniformStencil};
use crate::radial::{rss_eval_unchecked, RssParams};

/// Radial points of the coarse quadrature grid; the fine grid doubles it.
pub const RL_RADIAL_POINTS: usize = 1200;
/// Angular points of the quadrature grid.
pub const RL_ANGULAR_POINTS: usize = 2048;
/// Largest relative change allowed between the coarse and fine grids.
pub const RL_TOLERANCE: f64 = 1e-4;

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RungeLenz {
    pub mean_ax: f64,
    pub mean_ay: f64,
    pub d_ax: f64,
    pub d_ay: f64,
    /// `ΔA_x ΔA_y`.
    pub product: f64,
    /// `⟨A_x² + A_y²⟩`.
    pub a2: f64,
    /// `⟨HL⟩`.
    pub hl: f64,
    pub abs_hl: f64,
    pub z: f64,
    /// Largest relative change of `product` and `|⟨HL⟩|` under grid doubling; 0 for the closed form.
    pub error: f64,
}

impl RungeLenz {
    fn from_moments(mean_ax: f64, mean_ay: f64, ax2: f64, ay2: f64, hl: f64) -> RungeLenz {
        let d_ax = (ax2 - mean_ax * mean_ax).max(0.0).sqrt();
        let d_ay = (ay2 - mean_ay * mean_ay).max(0.0).sqrt();
        let product = d_ax * d_ay;
        let abs_hl = hl.abs();
        RungeLenz {
            mean_ax,
            mean_ay,
            d_ax,
            d_ay,
            product,
            a2: ax2 + ay2,
            hl,
            abs_hl,
            z: (product - abs_hl) / abs_hl,
            error: 0.0,
        }
    }
}

/// Closed-form diagnostics from the angular-momentum decomposition of the packet.
///
/// On `ψ e^{imφ}`, `A_± = A_x ± iA_y` give `ψ (u/r + v) e^{i(m±1)φ}` with
/// `u⁺ = −(m+½)(α−m)`, `v⁺ = (m+½)γ − 1`, `u⁻ = (m−½)(α+m)`, `v⁻ = −(m−½)γ − 1`,
/// where `γ = γ₀ + iγ₁`.
pub fn runge_lenz_analytic(p: &EssParams) -> Result<RungeLenz> {
    let rad = p.radial();
    let inv_r = rad.moment(-1.0)?;
    let inv_r2 = rad.moment(-2.0)?;
    let gamma = Complex64::new(p.gamma0(), p.gamma1());
    let alpha = p.alpha();
    let delta = p.delta();
    let half_width = (delta + 12.0 * delta.sqrt() + 40.0).ceil() as i64;
    let (m_lo, m_hi) = (p.beta() - half_width, p.beta() + half_width);
    // Pad by one so that every output mode sees both neighbours.
    let amps = fourier_amplitudes(&p.angular(), m_lo - 1, m_hi + 1)?;
    let a = |m: i64| -> f64 {
        if m < m_lo - 1 || m > m_hi + 1 {
            0.0
        } else {
            amps[(m - m_lo + 1) as usize]
        }
    };
    let up = |m: i64| {
        let mf = m as f64;
        (Complex64::new(-(mf + 0.5) * (alpha - mf), 0.0), (mf + 0.5) * gamma - 1.0)
    };
    let down = |m: i64| {
        let mf = m as f64;
        (Complex64::new((mf - 0.5) * (alpha + mf), 0.0), -(mf - 0.5) * gamma - 1.0)
    };
    let radial_mean = |u: Complex64, v: Complex64| u * inv_r + v;
    let radial_norm =
        |u: Complex64, v: Complex64| u.norm_sqr() * inv_r2 + 2.0 * (u.conj() * v).re * inv_r + v.norm_sqr();

    let (mut mean_x, mut mean_y) = (C0, C0);
    let (mut ax2, mut ay2) = (0.0, 0.0);
    for j in (m_lo - 2)..=(m_hi + 2) {
        let (u_p, v_p) = up(j - 1);
        let (u_m, v_m) = down(j + 1);
        let (ap, am) = (a(j - 1), a(j + 1));
        let (ux, vx) = (0.5 * (ap * u_p + am * u_m), 0.5 * (ap * v_p + am * v_m));
        let minus_half_i = Complex64::new(0.0, -0.5);
        let (uy, vy) = (minus_half_i * (ap * u_p - am * u_m), minus_half_i * (ap * v_p - am * v_m));
        let aj = a(j);
        mean_x += aj * radial_mean(ux, vx);
        mean_y += aj * radial_mean(uy, vy);
        ax2 += radial_norm(ux, vx);
        ay2 += radial_norm(uy, vy);
    }
    let mut hl = 0.0;
    for m in m_lo..=m_hi {
        let mf = m as f64;
        hl += a(m) * a(m) * mf * hamiltonian_expectation(alpha, p.gamma0(), p.gamma1(), mf * mf);
    }
    Ok(RungeLenz::from_moments(mean_x.re, mean_y.re, ax2, ay2, hl))
}

/// Quadrature diagnostics on the default grid, with a grid-doubling error estimate.
///
/// Fails with an accuracy error when doubling the radial resolution changes
/// `ΔA_x ΔA_y` or `|⟨HL⟩|` by more than [`RL_TOLERANCE`] relative.
pub fn runge_lenz_diagnostics(p: &EssParams) -> Result<RungeLenz> {
    let coarse = runge_lenz_quadrature(p, RL_RADIAL_POINTS, RL_ANGULAR_POINTS)?;
    let fine = runge_lenz_quadrature(p, 2 * RL_RADIAL_POINTS, RL_ANGULAR_POINTS)?;
    let change =
        ((fine.product - coarse.product) / fine.product).abs().max(((fine.abs_hl - coarse.abs_hl) / fine.abs_hl).abs());
    if !(change <= RL_TOLERANCE) {
        return Err(Error::Accuracy {
            what: "Runge-Lenz quadrature".into(),
            estimate: change,
            tolerance: RL_TOLERANCE,
        });
    }
    Ok(RungeLenz { error: change, ..fine })
}

/// Radial extent of the quadrature grid: four mean radii, or the packet support if wider.
fn quadrature_extent(rad: &RssParams) -> Result<f64> {
    Ok((4.0 * rad.moment(1.0)?).max(rad.support().1))
}

/// Quadrature diagnostics on an `n_r × n_phi` polar grid.
///
/// `Ψ = ψ(r) χ(φ)` is separable, so each operator image is a short sum of
/// radial-times-angular products and the 2-D integrals factor into 1-D Gram
/// matrices. The radial grid is quadratic in the index; radial derivatives are
/// sixth-order finite differences in the grid variable, angular derivatives are spectral.
pub fn runge_lenz_quadrature(p: &EssParams, n_r: usize, n_phi: usize) -> Result<RungeLenz> {
    if n_r < 16 || n_phi < 16 {
        return Err(Error::domain("Runge-Lenz grids need at least 16 points per axis"));
    }
    let rad = p.radial();
    // r = R s² on a uniform s grid: near the origin ψ ~ r^α, which a uniform r grid
    // resolves poorly when α is of order one.
    let extent = quadrature_extent(&rad)?;
    let h = 1.0 / n_r as f64;
    let s: Vec<f64> = (1..=n_r).map(|i| i as f64 * h).collect();
    let r: Vec<f64> = s.iter().map(|&x| extent * x * x).collect();
    let psi: Vec<Complex64> = r.iter().map(|&x| rss_eval_unchecked(&rad, x)).collect();
    let mut ds = vec![C0; n_r];
    let mut dss = vec![C0; n_r];
    UniformStencil::new(n_r, h, 1).apply(&psi, &mut ds);
    UniformStencil::new(n_r, h, 2).apply(&psi, &mut dss);
    // dr/ds = 2Rs, so ψ' = ψ_s / (2Rs) and ψ'' = (ψ_ss - ψ_s/s) / (2Rs)².
    let d1: Vec<Complex64> = ds.iter().zip(&s).map(|(f, x)| f / (2.0 * extent * x)).collect();
    let d2: Vec<Complex64> =
        dss.iter().zip(&ds).zip(&s).map(|((f2, f1), x)| (f2 - f1 / x) / (4.0 * extent * extent * x * x)).collect();
    // F0 ψ, F1 ψ', F2 ψ'', F3 ψ/r, F4 ψ'/r, F5 ψ/r².
    let radial: Vec<Vec<Complex64>> = vec![
        psi.clone(),
        d1.clone(),
        d2,
        psi.iter().zip(&r).map(|(f, x)| f / x).collect(),
        d1.iter().zip(&r).map(|(f, x)| f / x).collect(),
        psi.iter().zip(&r).map(|(f, x)| f / (x * x)).collect(),
    ];
    let mut wr: Vec<f64> = r.iter().zip(&s).map(|(x, y)| h * x * 2.0 * extent * y).collect();
    wr[n_r - 1] *= 0.5;
    let gram_r = gram(&radial, &wr);

    let phi = periodic_grid(n_phi);
    let ang = p.angular();
    let chi: Vec<Complex64> = phi.iter().map(|&x| css_eval(&ang, x)).collect::<Result<_>>()?;
    let spectral = SpectralDerivative::new(n_phi);
    let chi1 = spectral.apply(&chi, 1);
    let chi2 = spectral.apply(&chi, 2);
    let chi3 = spectral.apply(&chi, 3);
    let (cos, sin): (Vec<f64>, Vec<f64>) = phi.iter().map(|x| (x.cos(), x.sin())).unzip();
    let comb = |terms: &[(&[f64], &[Complex64], f64)]| -> Vec<Complex64> {
        (0..n_phi).map(|j| terms.iter().map(|(w, f, c)| f[j] * (w[j] * c)).sum()).collect()
    };
    let one = vec![1.0; n_phi];
    let hphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let wphi = vec![hphi; n_phi];

    let psi_terms = vec![(0, chi.clone())];
    let ax_terms = vec![
        (1, comb(&[(&sin, &chi1, -1.0), (&cos, &chi, -0.5)])),
        (3, comb(&[(&cos, &chi2, -1.0), (&sin, &chi1, 0.5)])),
        (0, comb(&[(&cos, &chi, -1.0)])),
    ];
    let ay_terms = vec![
        (1, comb(&[(&cos, &chi1, 1.0), (&sin, &chi, -0.5)])),
        (3, comb(&[(&sin, &chi2, -1.0), (&cos, &chi1, -0.5)])),
        (0, comb(&[(&sin, &chi, -1.0)])),
    ];
    let i = Complex64::new(0.0, 1.0);
    let scale = |f: Vec<Complex64>, c: Complex64| f.into_iter().map(|v| v * c).collect::<Vec<_>>();
    let hl_terms = vec![
        (2, scale(comb(&[(&one, &chi1, -0.5)]), -i)),
        (4, scale(comb(&[(&one, &chi1, -0.5)]), -i)),
        (5, scale(comb(&[(&one, &chi3, -0.5)]), -i)),
        (3, scale(comb(&[(&one, &chi1, -1.0)]), -i)),
    ];

    let inner = |a: &[(usize, Vec<Complex64>)], b: &[(usize, Vec<Complex64>)]| -> Complex64 {
        let mut s = C0;
        for (ia, ga) in a {
            for (ib, gb) in b {
                let ang: Complex64 = ga.iter().zip(gb).zip(&wphi).map(|((x, y), w)| x.conj() * y * w).sum();
                s += gram_r[*ia][*ib] * ang;
            }
        }
        s
    };
    let norm = inner(&psi_terms, &psi_terms).re;
    let mean_x = inner(&psi_terms, &ax_terms).re / norm;
    let mean_y = inner(&psi_terms, &ay_terms).re / norm;
    let ax2 = inner(&ax_terms, &ax_terms).re / norm;
    let ay2 = inner(&ay_terms, &ay_terms).re / norm;
    let hl = inner(&psi_terms, &hl_terms).re / norm;
    Ok(RungeLenz::from_moments(mean_x, mean_y, ax2, ay2, hl))
}

/// `G[a][b] = Σ_i w_i conj(f_a[i]) f_b[i]`.
fn gram(funcs: &[Vec<Complex64>], w: &[f64]) -> Vec<Vec<Complex64>> {
    funcs
        .iter()
        .map(|fa| funcs.iter().map(|fb| fa.iter().zip(fb).zip(w).map(|((x, y), w)| x.conj() * y * w).sum()).collect())
        .collect()
}

/// Spectral `d^k/dφ^k` of periodic samples on [`periodic_grid`].
struct SpectralDerivative {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralDerivative {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        SpectralDerivative { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn apply(&self, f: &[Complex64], k: u32) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            let m = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            // The Nyquist mode has no well-defined odd derivative.
            if n % 2 == 0 && j == n / 2 && k % 2 == 1 {
                *v = C0;
                continue;
            }
            *v *= Complex64::new(0.0, m as f64).powu(k) / n as f64;
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// Polar grid `r_i = i h` (`i = 1..=n_r`) by the periodic `φ` grid, with the
/// planar Coulomb operators acting on sampled fields.
///
/// Fields are stored row-major as `f[i_r * n_phi + i_phi]`.
pub struct PolarGrid {
    r: Vec<f64>,
    phi: Vec<f64>,
    d1: UniformStencil,
    d2: UniformStencil,
    spectral: SpectralDerivative,
    h: f64,
}

impl PolarGrid {
    pub fn new(r_max: f64, n_r: usize, n_phi: usize) -> Result<PolarGrid> {
        if !(r_max > 0.0) || !r_max.is_finite() || n_r < 7 || n_phi < 4 {
            return Err(Error::domain("polar grid needs r_max > 0, n_r >= 7 and n_phi >= 4"));
        }
        let h = r_max / n_r as f64;
        Ok(PolarGrid {
            r: (1..=n_r).map(|i| i as f64 * h).collect(),
            phi: periodic_grid(n_phi),
            d1: UniformStencil::new(n_r, h, 1),
            d2: UniformStencil::new(n_r, h, 2),
            spectral: SpectralDerivative::new(n_phi),
            h,
        })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        self.r.iter().flat_map(|&r| self.phi.iter().map(move |&p| (r, p))).map(|(r, p)| f(r, p)).collect()
    }

    /// `∫ conj(a) b r dr dφ`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let nphi = self.phi.len();
        let w = self.h * 2.0 * std::f64::consts::PI / nphi as f64;
        a.chunks(nphi)
            .zip(b.chunks(nphi))
            .zip(&self.r)
            .map(|((ra, rb), r)| ra.iter().zip(rb).map(|(x, y)| x.conj() * y).sum::<Complex64>() * (r * w))
            .sum()
    }

    fn d_r(&self, f: &[Complex64], order: usize) -> Vec<Complex64> {
        let (nr, nphi) = (self.r.len(), self.phi.len());
        let stencil = if order == 1 { &self.d1 } else { &self.d2 };
        let mut out = vec![C0; f.len()];
        let mut col = vec![C0; nr];
        let mut dcol = vec![C0; nr];
        for j in 0..nphi {
            for i in 0..nr {
                col[i] = f[i * nphi + j];
            }
            stencil.apply(&col, &mut dcol);
            for i in 0..nr {
                out[i * nphi + j] = dcol[i];
            }
        }
        out
    }

    fn d_phi(&self, f: &[Complex64], k: u32) -> Vec<Complex64> {
        f.chunks(self.phi.len()).flat_map(|row| self.spectral.apply(row, k)).collect()
    }

    fn pointwise(&self, f: &[Complex64], g: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let nphi = self.phi.len();
        f.iter().enumerate().map(|(k, v)| v * g(self.r[k / nphi], self.phi[k % nphi])).collect()
    }

    /// `L = −i ∂_φ`.
    pub fn l(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.d_phi(f, 1).into_iter().map(|v| v * Complex64::new(0.0, -1.0)).collect()
    }

    /// `p_x = −i (cosφ ∂_r − (sinφ/r) ∂_φ)`.
    pub fn p_x(&self, f: &[Complex64]) -> Vec<Complex64> {
        let dr = self.pointwise(&self.d_r(f, 1), |_, p| Complex64::new(p.cos(), 0.0));
        let dp = self.pointwise(&self.d_phi(f, 1), |r, p| Complex64::new(-p.sin() / r, 0.0));
        dr.iter().zip(&dp).map(|(a, b)| (a + b) * Complex64::new(0.0, -1.0)).collect()
    }

    /// `p_y = −i (sinφ ∂_r + (cosφ/r) ∂_φ)`.
    pub fn p_y(&self, f: &[Complex64]) -> Vec<Complex64> {
        let dr = self.pointwise(&self.d_r(f, 1), |_, p| Complex64::new(p.sin(), 0.0));
        let dp = self.pointwise(&self.d_phi(f, 1), |r, p| Complex64::new(p.cos() / r, 0.0));
        dr.iter().zip(&dp).map(|(a, b)| (a + b) * Complex64::new(0.0, -1.0)).collect()
    }

    /// `H = −½(∂_r² + ∂_r/r + ∂_φ²/r²) − 1/r`.
    pub fn hamiltonian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let d2 = self.d_r(f, 2);
        let d1 = self.pointwise(&self.d_r(f, 1), |r, _| Complex64::new(1.0 / r, 0.0));
        let dpp = self.pointwise(&self.d_phi(f, 2), |r, _| Complex64::new(1.0 / (r * r), 0.0));
        let coul = self.pointwise(f, |r, _| Complex64::new(-1.0 / r, 0.0));
        (0..f.len()).map(|k| -0.5 * (d2[k] + d1[k] + dpp[k]) + coul[k]).collect()
    }

    /// `A_x = ½(p_y L + L p_y) − cosφ`.
    pub fn a_x(&self, f: &[Complex64]) -> Vec<Complex64> {
        let a = self.p_y(&self.l(f));
        let b = self.l(&self.p_y(f));
        let c = self.pointwise(f, |_, p| Complex64::new(p.cos(), 0.0));
        (0..f.len()).map(|k| 0.5 * (a[k] + b[k]) - c[k]).collect()
    }

    /// `A_y = −½(p_x L + L p_x) − sinφ`.
    pub fn a_y(&self, f: &[Complex64]) -> Vec<Complex64> {
        let a = self.p_x(&self.l(f));
        let b = self.l(&self.p_x(f));
        let c = self.pointwise(f, |_, p| Complex64::new(p.sin(), 0.0));
        (0..f.len()).map(|k| -0.5 * (a[k] + b[k]) - c[k]).collect()
    }
}
