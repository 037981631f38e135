//! Quadrature rules and finite-difference stencils shared by the oracles and
//! the Runge–Lenz grid route.

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1], found by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed set of nodes and weights.
#[derive(Clone, Debug)]
pub(crate) struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre over consecutive break points.
    pub fn composite(breaks: &[f64], order: usize) -> Rule {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Rule { nodes, weights }
    }

    #[cfg(test)]
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_c(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Break points covering [lo, hi] with panels no wider than `width`; when
/// `lo == 0` the first panel is graded geometrically toward the origin.
pub(crate) fn panel_breaks(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let mut breaks = Vec::new();
    let mut start = lo;
    if lo <= 0.0 {
        let first = width.min(hi);
        breaks.push(0.0);
        let mut g = first * 2f64.powi(-40);
        while g < first {
            breaks.push(g);
            g *= 2.0;
        }
        start = first;
    }
    let panels = ((hi - start) / width).ceil().max(1.0) as usize;
    for i in 0..=panels {
        breaks.push(start + (hi - start) * i as f64 / panels as f64);
    }
    breaks.dedup();
    breaks
}

/// Equispaced periodic grid on [-π, π).
pub(crate) fn periodic_grid(n: usize) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|j| -std::f64::consts::PI + step * j as f64).collect()
}

/// Fornberg's finite-difference weights at `z` for the sample points `x`,
/// for derivative orders `0..=m`; `out[k][j]` multiplies `f(x[j])`.
pub(crate) fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Seven-point (sixth-order) derivative stencils on a uniform grid, central in
/// the interior and one-sided within three points of either end.
#[derive(Clone, Debug)]
pub(crate) struct UniformStencil {
    n: usize,
    /// Rows for grid positions 0..3 (left edge), then the interior row, then
    /// rows for the last three positions.
    rows: Vec<[f64; 7]>,
}

impl UniformStencil {
    pub fn new(n: usize, h: f64, order: usize) -> UniformStencil {
        assert!(n >= 7);
        let offsets: Vec<f64> = (0..7).map(|j| j as f64).collect();
        let mut rows = Vec::with_capacity(7);
        for pos in 0..7 {
            let w = fornberg(pos as f64, &offsets, order);
            let mut row = [0.0; 7];
            for j in 0..7 {
                row[j] = w[order][j] / h.powi(order as i32);
            }
            rows.push(row);
        }
        UniformStencil { n, rows }
    }

    /// Applies the stencil to `f`, writing the derivative into `out`.
    pub fn apply(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let (start, row) = if i < 3 {
                (0, &self.rows[i])
            } else if i + 3 >= n {
                (n - 7, &self.rows[i + 7 - n])
            } else {
                (i - 3, &self.rows[3])
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..7 {
                acc += f[start + j] * row[j];
            }
            *o = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((m - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_handles_graded_origin() {
        let rule = Rule::composite(&panel_breaks(0.0, 1.0, 0.25), 16);
        let v = rule.integrate(|x| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[2][0] - 1.0).abs() < 1e-14);
        assert!((w[2][1] + 2.0).abs() < 1e-14);
        assert!((w[1][2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn stencil_is_sixth_order() {
        let n = 200;
        let h = 0.01;
        let f: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * h).sin(), 0.0)).collect();
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        UniformStencil::new(n, h, 1).apply(&f, &mut d);
        for (i, v) in d.iter().enumerate() {
            assert!((v.re - (i as f64 * h).cos()).abs() < 1e-11, "i = {i}");
        }
    }
}
