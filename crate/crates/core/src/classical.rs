//! Classical planar Kepler orbits used as the reference for packet motion.

use serde::Serialize;

use crate::error::{Error, Result};

/// Duration of one atomic unit of time in seconds.
pub const AU_TIME_SECONDS: f64 = 2.418884e-17;

/// Bound Kepler ellipse in atomic units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitGeometry {
    /// Semimajor axis.
    pub a: f64,
    /// Eccentricity in `[0, 1)`.
    pub e: f64,
    /// Orientation of the outer apsis, radians.
    pub eta: f64,
    /// Inner apsidal distance `a (1 - e)`.
    pub r1: f64,
    /// Outer apsidal distance `a (1 + e)`.
    pub r2: f64,
    /// Orbital period.
    pub t_cl: f64,
    /// Energy (negative).
    pub energy: f64,
    /// Angular momentum (positive).
    pub l: f64,
}

/// Which apsis the trajectory occupies at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Apsis {
    Inner,
    Outer,
}

/// Planar Rydberg energy `-1 / (2 (n - 1/2)^2)`.
pub fn planar_energy(n: f64) -> f64 {
    -0.5 / ((n - 0.5) * (n - 0.5))
}

/// Ellipse with energy `energy` and angular momentum `l`, oriented at `η = 0`.
pub fn orbit_from_energy(energy: f64, l: f64) -> Result<OrbitGeometry> {
    if !energy.is_finite() || energy >= 0.0 {
        return Err(Error::UnboundOrbit(energy));
    }
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::domain(format!(
            "angular momentum must be positive (l = {l} gives a degenerate radial orbit)"
        )));
    }
    let abs_e = -energy;
    let x = 2.0 * l * l * abs_e;
    if x > 1.0 + 1e-12 {
        return Err(Error::NoRealEccentricity(x));
    }
    let e = (1.0 - x).max(0.0).sqrt();
    let a = 1.0 / (2.0 * abs_e);
    Ok(OrbitGeometry {
        a,
        e,
        eta: 0.0,
        r1: a * (1.0 - e),
        r2: a * (1.0 + e),
        t_cl: 2.0 * std::f64::consts::PI / (2.0 * abs_e).powf(1.5),
        energy,
        l,
    })
}

/// Orbital period `2π (n̄ - 1/2)^3` in atomic units of time.
pub fn classical_period(n_bar: f64) -> f64 {
    2.0 * std::f64::consts::PI * (n_bar - 0.5).powi(3)
}

/// Orbital period in seconds.
pub fn classical_period_seconds(n_bar: f64) -> f64 {
    classical_period(n_bar) * AU_TIME_SECONDS
}

/// Outer apsidal distance of the orbit with energy `E_n̄` and angular momentum `l̄`.
pub fn outer_apsis(n_bar: f64, l_bar: f64) -> Result<f64> {
    Ok(orbit_from_energy(planar_energy(n_bar), l_bar)?.r2)
}

/// Inner apsidal distance of the orbit with energy `E_n̄` and angular momentum `l̄`.
pub fn inner_apsis(n_bar: f64, l_bar: f64) -> Result<f64> {
    Ok(orbit_from_energy(planar_energy(n_bar), l_bar)?.r1)
}

/// Position `(r, φ)` at time `t` for a body leaving `start` at `t = 0`.
///
/// `φ` is continuous in `t` (not wrapped) and equals `η` at the outer apsis
/// when `start` is [`Apsis::Outer`]; motion is toward increasing `φ`.
pub fn kepler_position(orbit: &OrbitGeometry, t: f64, start: Apsis) -> Result<(f64, f64)> {
    let e = orbit.e;
    let (m0, phi_offset) = match start {
        Apsis::Inner => (0.0, 0.0),
        Apsis::Outer => (std::f64::consts::PI, -std::f64::consts::PI),
    };
    let m = 2.0 * std::f64::consts::PI * t / orbit.t_cl + m0;
    let u = solve_kepler(m, e)?;
    let r = orbit.a * (1.0 - e * u.cos());
    let b = e / (1.0 + (1.0 - e * e).sqrt());
    let nu = u + 2.0 * (b * u.sin()).atan2(1.0 - b * u.cos());
    Ok((r, orbit.eta + nu + phi_offset))
}

fn solve_kepler(m: f64, e: f64) -> Result<f64> {
    let mut u = if e < 0.8 { m } else { m + 0.85 * e * m.sin().signum() };
    for _ in 0..100 {
        let f = u - e * u.sin() - m;
        let du = f / (1.0 - e * u.cos());
        u -= du;
        if f.abs() < 1e-13 * m.abs().max(1.0) {
            // One extra step takes the quadratically convergent iterate to rounding level.
            let f = u - e * u.sin() - m;
            return Ok(u - f / (1.0 - e * u.cos()));
        }
    }
    Err(Error::Numerical(format!("Kepler equation did not converge for M = {m}, e = {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn reference_orbit() -> OrbitGeometry {
        orbit_from_energy(planar_energy(45.0), 30.0).unwrap()
    }

    #[test]
    fn orbit_reference_values() {
        let o = reference_orbit();
        assert!((o.a - 1980.25).abs() < 1e-9);
        assert!((o.e - 0.73859).abs() < 1e-5);
        assert!((o.r1 - 517.0).abs() < 1.0);
        let o40 = orbit_from_energy(planar_energy(45.0), 40.0).unwrap();
        assert!((o40.r1 - 1113.0).abs() < 1.0);
        assert!(o.r1 <= o.r2);
        assert!((o.r2 - o.a * (1.0 + o.e)).abs() < 1e-9);
    }

    #[test]
    fn circular_and_degenerate_limits() {
        let energy = -1e-3;
        let l = (1.0 / (2.0 * 1e-3_f64)).sqrt();
        let o = orbit_from_energy(energy, l).unwrap();
        assert!(o.e < 1e-6);
        assert!((o.r1 - o.a).abs() < 1e-3 && (o.r2 - o.a).abs() < 1e-3);
        assert!(orbit_from_energy(energy, 0.0).is_err());
        assert!(matches!(orbit_from_energy(0.0, 1.0), Err(Error::UnboundOrbit(_))));
        assert!(matches!(orbit_from_energy(energy, 2.0 * l), Err(Error::NoRealEccentricity(_))));
    }

    #[test]
    fn period_values() {
        assert!((classical_period(45.0) - 2.0 * PI * 44.5f64.powi(3)).abs() < 1e-6);
        assert!((classical_period(45.0) - 553_681.36).abs() < 0.01);
        assert!((classical_period_seconds(45.0) * 1e12 - 13.4).abs() < 0.05);
        assert_eq!(classical_period(0.5), 0.0);
        let o = reference_orbit();
        assert!((o.t_cl - classical_period(45.0)).abs() < 1e-6 * o.t_cl);
    }

    #[test]
    fn apsides_at_start_and_half_period() {
        let o = reference_orbit();
        let (r, phi) = kepler_position(&o, 0.0, Apsis::Outer).unwrap();
        assert!((r - o.r2).abs() < 1e-9 * o.r2 && phi.abs() < 1e-12);
        let (r, phi) = kepler_position(&o, 0.5 * o.t_cl, Apsis::Outer).unwrap();
        assert!((r - o.r1).abs() < 1e-9 * o.r1 && (phi - PI).abs() < 1e-9);
        let (r, _) = kepler_position(&o, 0.0, Apsis::Inner).unwrap();
        assert!((r - o.r1).abs() < 1e-9 * o.r1);
    }

    /// Leapfrog integration of the radial equation of motion, independent of Kepler's equation.
    fn leapfrog_radius(o: &OrbitGeometry, t_end: f64, steps: usize) -> f64 {
        let force = |r: f64| o.l * o.l / (r * r * r) - 1.0 / (r * r);
        let dt = t_end / steps as f64;
        let mut r = o.r2;
        let mut p = 0.0;
        for _ in 0..steps {
            p += 0.5 * dt * force(r);
            r += dt * p;
            p += 0.5 * dt * force(r);
        }
        r
    }

    #[test]
    fn quarter_period_matches_ode_integration() {
        let o = reference_orbit();
        let t = 0.25 * o.t_cl;
        // Step size is one millionth of the period.
        let steps = 250_000;
        let r_ode = leapfrog_radius(&o, t, steps);
        let (r, _) = kepler_position(&o, t, Apsis::Outer).unwrap();
        assert!((r - r_ode).abs() < 1e-4 * r_ode, "{r} vs {r_ode}");
    }

    #[test]
    fn energy_conservation_along_trajectory() {
        let o = reference_orbit();
        let h = 20.0;
        for i in 0..50 {
            let t = o.t_cl * (0.013 + i as f64 / 50.0);
            let rr = |dt: f64| kepler_position(&o, t + dt, Apsis::Outer).unwrap().0;
            let pr = (rr(-2.0 * h) - 8.0 * rr(-h) + 8.0 * rr(h) - rr(2.0 * h)) / (12.0 * h);
            let r = rr(0.0);
            let e = 0.5 * pr * pr + o.l * o.l / (2.0 * r * r) - 1.0 / r;
            assert!(((e - o.energy) / o.energy).abs() < 1e-10, "t = {t}: {e}");
        }
    }

    #[test]
    fn equal_area_law() {
        let o = reference_orbit();
        let h = 1.0;
        let mut rates = Vec::new();
        for i in 0..100 {
            let t = o.t_cl * i as f64 / 100.0 + 7.0;
            let (r, _) = kepler_position(&o, t, Apsis::Outer).unwrap();
            let (_, p1) = kepler_position(&o, t + h, Apsis::Outer).unwrap();
            let (_, p0) = kepler_position(&o, t - h, Apsis::Outer).unwrap();
            rates.push(0.5 * r * r * (p1 - p0) / (2.0 * h));
        }
        for w in &rates {
            assert!((w - 0.5 * o.l).abs() < 1e-6 * 0.5 * o.l);
        }
    }

    proptest! {
        #[test]
        fn period_closure(n in 5.0f64..80.0, frac in 0.05f64..0.999) {
            let e_n = planar_energy(n);
            let l_max = (1.0 / (2.0 * -e_n)).sqrt();
            let o = orbit_from_energy(e_n, frac * l_max).unwrap();
            let (r0, _) = kepler_position(&o, 0.0, Apsis::Outer).unwrap();
            let (r1, phi1) = kepler_position(&o, o.t_cl, Apsis::Outer).unwrap();
            prop_assert!((r1 - r0).abs() <= 1e-9 * r0);
            prop_assert!((phi1 - 2.0 * PI).abs() < 1e-8);
        }

        #[test]
        fn radius_stays_between_apsides(frac in 0.05f64..0.999, s in 0.0f64..3.0) {
            let e_n = planar_energy(20.0);
            let l_max = (1.0 / (2.0 * -e_n)).sqrt();
            let o = orbit_from_energy(e_n, frac * l_max).unwrap();
            let (r, _) = kepler_position(&o, s * o.t_cl, Apsis::Outer).unwrap();
            prop_assert!(r >= o.r1 * (1.0 - 1e-12) && r <= o.r2 * (1.0 + 1e-12));
        }
    }
}
