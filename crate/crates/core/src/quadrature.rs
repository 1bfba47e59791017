//! Gauss–Legendre quadrature.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed in double precision by Newton iteration on the three-term
/// recurrence. Nodes are ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A quadrature rule mapped onto `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn gauss_legendre(n: usize, a: T, b: T) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        Self {
            nodes: x.iter().map(|&xi| mid + half * T::lit(xi)).collect(),
            weights: w.iter().map(|&wi| half * T::lit(wi)).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 32, 64] {
            let (_, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = Rule::gauss_legendre(4, 0.0, 2.0);
        // ∫₀² x⁷ dx = 2⁸/8
        assert_abs_diff_eq!(rule.integrate(|x: f64| x.powi(7)), 32.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_trigonometric_periods() {
        let rule = Rule::gauss_legendre(32, 0.0, 1.0);
        let tau = std::f64::consts::TAU;
        assert_abs_diff_eq!(rule.integrate(|t| (tau * t).sin()), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|t| (tau * t).cos().powi(2)), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn nodes_ascending_and_symmetric() {
        let (x, _) = gauss_legendre(7);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(x[3], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[0], -x[6], epsilon = 1e-15);
    }
}
