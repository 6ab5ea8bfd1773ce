// SPDX-License-Identifier: Apache-2.0

//! Special-function kernels: Bessel J1, Gauss-Legendre rules and normalized
//! Hermite functions.

use std::f64::consts::PI;

/// Switch between Miller's backward recurrence and the Hankel expansion.
const J1_ASYMPTOTIC_FROM: f64 = 25.0;

/// Bessel function of the first kind, order one.
///
/// Backward (Miller) recurrence normalized by `J0 + 2 Σ J_2k = 1` for
/// `|x| <= 25`, Hankel asymptotic expansion beyond. Absolute accuracy is
/// better than 1e-13 on `|x| <= 200`.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax == 0.0 {
        0.0
    } else if ax <= J1_ASYMPTOTIC_FROM {
        j1_miller(ax)
    } else {
        j1_hankel(ax)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

fn j1_miller(x: f64) -> f64 {
    const RESCALE: f64 = 1e150;
    let mut start = x.ceil() as usize + 60;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let (mut above, mut current) = (0.0_f64, 1e-300_f64);
    let mut j1 = 0.0;
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        // current = J_k, above = J_{k+1}; step down to J_{k-1}
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE {
            current /= RESCALE;
            above /= RESCALE;
            j1 /= RESCALE;
            even_sum /= RESCALE;
        }
        let order = k - 1;
        if order == 1 {
            j1 = current;
        }
        if order % 2 == 0 && order > 0 {
            even_sum += current;
        }
    }
    // current now holds J_0
    j1 / (current + 2.0 * even_sum)
}

fn j1_hankel(x: f64) -> f64 {
    let mu = 4.0;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if term.abs() >= prev || term.abs() < 1e-18 {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J1(x) / x` with the removable singularity at zero (limit 1/2).
pub fn bessel_j1_over_x(x: f64) -> f64 {
    if x.abs() < 2e-4 {
        let x2 = x * x;
        0.5 - x2 / 16.0 + x2 * x2 / 384.0
    } else {
        bessel_j1(x) / x
    }
}

/// `sin(x) / x` with the removable singularity at zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 2e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // theta grows with i, so x = cos(theta) descends from the right end
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let x = self.nodes.iter().map(|&u| mid + half * u).collect();
        let w = self.weights.iter().map(|&w| half * w).collect();
        (x, w)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fills `out[j]` with the orthonormal Hermite function
/// `H_j(y) exp(-y²/2) / sqrt(2^j j! sqrt(π))` for `j < out.len()`.
///
/// Uses the three-term recurrence on the normalized functions, which stays
/// finite for any order (raw `H_j` and `j!` overflow past j ≈ 85).
pub fn hermite_functions(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * y * out[0];
    }
    for j in 2..out.len() {
        let jf = j as f64;
        out[j] = (2.0 / jf).sqrt() * y * out[j - 1] - ((jf - 1.0) / jf).sqrt() * out[j - 2];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J1(x) = (1/π) ∫_0^π cos(τ - x sin τ) dτ; the integrand is smooth and
    /// periodic, so the trapezoid rule converges geometrically.
    fn j1_integral(x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let mut s = 0.0;
        for k in 0..=m {
            let tau = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            s += w * (tau - x * tau.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn j1_matches_integral_representation() {
        for i in 0..=400 {
            let x = -200.0 + i as f64;
            let got = bessel_j1(x + 0.37);
            let want = j1_integral(x + 0.37);
            assert!((got - want).abs() < 1e-11, "x={} got={} want={}", x + 0.37, got, want);
        }
    }

    #[test]
    fn j1_tabulated_values() {
        // reference values from an independent library
        let table = [
            (1.0, 0.440_050_585_744_933_55),
            (2.0, 0.576_724_807_756_873_4),
            (10.0, 0.043_472_746_168_861_41),
            (30.0, -0.118_751_062_616_623_05),
            (100.0, -0.077_145_352_014_112_3),
        ];
        for (x, want) in table {
            assert!((bessel_j1(x) - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn j1_edge_values() {
        assert_eq!(bessel_j1(0.0), 0.0);
        let z = 3.831_705_970_207_512;
        assert!(bessel_j1(z).abs() < 1e-12);
        assert!(bessel_j1(z - 1e-3) > 0.0 && bessel_j1(z + 1e-3) < 0.0);
        assert!((bessel_j1_over_x(1e-6) - 0.5).abs() < 1e-12);
        assert!((bessel_j1_over_x(1e-3) - bessel_j1(1e-3) / 1e-3).abs() < 1e-14);
        assert!((bessel_j1(-2.0) + bessel_j1(2.0)).abs() < 1e-16);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64, 401] {
            let rule = GaussLegendre::new(n);
            for deg in 0..(2 * n).min(40) {
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg} got={got}");
            }
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn gauss_legendre_large_rule_is_accurate() {
        let rule = GaussLegendre::new(4096);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        // ∫ cos(200 x) dx over [-1, 1] = sin(200)/100
        let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (200.0 * x).cos()).sum();
        assert!((got - (200.0_f64).sin() / 100.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_functions_low_orders() {
        let mut out = [0.0; 3];
        hermite_functions(0.7, &mut out);
        let g = PI.powf(-0.25) * (-0.245_f64).exp();
        assert!((out[0] - g).abs() < 1e-15);
        assert!((out[1] - g * 2.0 * 0.7 / 2f64.sqrt()).abs() < 1e-15);
        // H_2 = 4y² - 2, norm sqrt(8 sqrt π)
        let h2 = (4.0 * 0.49 - 2.0) * (-0.245_f64).exp() / (8.0 * PI.sqrt()).sqrt();
        assert!((out[2] - h2).abs() < 1e-15);
    }

    #[test]
    fn hermite_functions_high_order_stay_finite() {
        let mut out = vec![0.0; 300];
        hermite_functions(5.0, &mut out);
        assert!(out.iter().all(|v| v.is_finite() && v.abs() < 1.0));
    }
}
