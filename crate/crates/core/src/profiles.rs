//! Closed-form densities used as initial data and reference solutions.

use crate::error::{Error, Result};
use crate::quadrature::Rule;
use crate::scalar::Real;

/// Normal density with the given mean and variance.
pub fn gaussian_pdf<T: Real>(x: T, mean: T, var: T) -> T {
    let z = x - mean;
    (-(z * z) / (T::lit(2.0) * var)).exp() / (T::TAU() * var).sqrt()
}

/// Self-similar Barenblatt solution of `∂_t ρ = ∂_xx ρ^m` with unit mass,
///
/// `ρ(t, x) = t^{-α} (C − k x² t^{-2α})_+^{1/(m−1)}`, `α = 1/(m+1)`,
/// `k = α(m−1)/(2m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt<T> {
    m: T,
    alpha: T,
    k: T,
    c: T,
}

impl<T: Real> Barenblatt<T> {
    pub fn new(m: T) -> Result<Self> {
        if !(m > T::one()) {
            return Err(Error::param("m", "Barenblatt profile needs m > 1"));
        }
        let one = T::one();
        let alpha = one / (m + one);
        let k = alpha * (m - one) / (T::lit(2.0) * m);
        let p = one / (m - one);
        // ∫_{-1}^{1} (1 − s²)^p ds, smooth enough for Gauss–Legendre at these orders
        let shape = Rule::gauss_legendre(128, -one, one).integrate(|s| (one - s * s).powf(p));
        let c = (k.sqrt() / shape).powf(one / (p + T::lit(0.5)));
        Ok(Self { m, alpha, k, c })
    }

    pub fn m(&self) -> T {
        self.m
    }

    /// The constant `C` fixing unit mass.
    pub fn constant(&self) -> T {
        self.c
    }

    pub fn density(&self, t: T, x: T) -> T {
        let base = self.c - self.k * x * x * t.powf(-T::lit(2.0) * self.alpha);
        if base <= T::zero() {
            T::zero()
        } else {
            t.powf(-self.alpha) * base.powf(T::one() / (self.m - T::one()))
        }
    }

    /// Half-width of the support at time `t`.
    pub fn support_radius(&self, t: T) -> T {
        (self.c / self.k).sqrt() * t.powf(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_pdf_peak() {
        assert_abs_diff_eq!(
            gaussian_pdf(0.0, 0.0, 1.0),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn porous_medium_constant() {
        let b = Barenblatt::new(2.0).unwrap();
        // closed form for m = 2: C = (3/(8√3))^{2/3}
        let c: f64 = (3.0 / (8.0 * 3f64.sqrt())).powf(2.0 / 3.0);
        assert_abs_diff_eq!(b.constant(), c, epsilon = 1e-12);
        assert_abs_diff_eq!(b.constant(), 0.3606, epsilon = 1e-4);
    }

    #[test]
    fn unit_mass_at_several_times() {
        for m in [2.0, 3.0] {
            let b = Barenblatt::new(m).unwrap();
            for t in [0.05, 0.3, 2.0] {
                let r = b.support_radius(t);
                let mass = Rule::gauss_legendre(200, -r, r).integrate(|x| b.density(t, x));
                assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn rejects_linear_diffusion() {
        assert!(Barenblatt::new(1.0).is_err());
    }
}
