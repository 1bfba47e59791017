//! Time-periodic interaction and confinement potentials `W_t(x, y)`.

mod validate;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Rule;
use crate::scalar::Real;

pub use validate::{validate_assumptions, AssumptionCheck, ValidationReport};

/// Time-independent two-point kernel `K(x, y)`.
pub trait Kernel<T: Real>: Send + Sync + fmt::Debug {
    fn eval(&self, x: T, y: T) -> T;
    fn grad_x(&self, x: T, y: T) -> T;
    fn lap_x(&self, x: T, y: T) -> T;

    /// Value and x-gradient together; override when they share work.
    fn eval_grad(&self, x: T, y: T) -> (T, T) {
        (self.eval(x, y), self.grad_x(x, y))
    }

    /// `Σ_i Σ_j K(x_i, x_j)`, writing `Σ_j ∂_x K(x_i, x_j)` into `rows`,
    /// for kernels with a route cheaper than the double loop.
    fn pair_sums(&self, _x: &[T], _rows: &mut [T]) -> Option<T> {
        None
    }
}

/// Potential `W_t(x, y)` together with its derivatives.
pub trait TimePotential<T: Real>: Send + Sync + fmt::Debug {
    fn eval(&self, t: T, x: T, y: T) -> T;
    fn grad_x(&self, t: T, x: T, y: T) -> T;
    fn lap_x(&self, t: T, x: T, y: T) -> T;
    /// `∂_t W_t(x, y)`.
    fn time_derivative(&self, t: T, x: T, y: T) -> T;

    fn period(&self) -> T {
        T::one()
    }

    /// `(a(t), K)` when `W_t = a(t)·K`.
    fn factorized(&self, _t: T) -> Option<(T, &dyn Kernel<T>)> {
        None
    }

    /// True when `W` vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }

    fn eval_grad(&self, t: T, x: T, y: T) -> (T, T) {
        (self.eval(t, x, y), self.grad_x(t, x, y))
    }
}

/// Confinement profile `v` for separable potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `v(x) = x²/2`
    Quadratic,
    /// `v(x) = (x² − 1)²/4`
    DoubleWell,
}

impl Profile {
    fn value<T: Real>(self, x: T) -> T {
        match self {
            Profile::Quadratic => T::lit(0.5) * x * x,
            Profile::DoubleWell => T::lit(0.25) * (x * x - T::one()).powi(2),
        }
    }

    fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Profile::Quadratic => x,
            Profile::DoubleWell => x * (x * x - T::one()),
        }
    }

    fn second_derivative<T: Real>(self, x: T) -> T {
        match self {
            Profile::Quadratic => T::one(),
            Profile::DoubleWell => T::lit(3.0) * x * x - T::one(),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Profile::Quadratic),
            "double_well" => Ok(Profile::DoubleWell),
            other => Err(Error::param(
                "potential.v",
                format!("unknown profile {other:?}, expected quadratic or double_well"),
            )),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Quadratic => "quadratic",
            Profile::DoubleWell => "double_well",
        })
    }
}

/// Built-in kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinKernel<T> {
    /// `K ≡ c`
    Constant(T),
    /// `K = (x − y)²/2`
    Quadratic,
    /// `K = −exp(−(x − y)²/(2s²))`
    GaussianAttraction { s: T },
    /// `K = v(x) + v(y)`
    Separable(Profile),
}

impl<T: Real> Kernel<T> for BuiltinKernel<T> {
    fn eval(&self, x: T, y: T) -> T {
        match *self {
            BuiltinKernel::Constant(c) => c,
            BuiltinKernel::Quadratic => T::lit(0.5) * (x - y) * (x - y),
            BuiltinKernel::GaussianAttraction { s } => {
                let z = (x - y) / s;
                -(-T::lit(0.5) * z * z).exp()
            }
            BuiltinKernel::Separable(v) => v.value(x) + v.value(y),
        }
    }

    fn grad_x(&self, x: T, y: T) -> T {
        self.eval_grad(x, y).1
    }

    fn lap_x(&self, x: T, y: T) -> T {
        match *self {
            BuiltinKernel::Constant(_) => T::zero(),
            BuiltinKernel::Quadratic => T::one(),
            BuiltinKernel::GaussianAttraction { s } => {
                let z = (x - y) / s;
                (-T::lit(0.5) * z * z).exp() * (T::one() - z * z) / (s * s)
            }
            BuiltinKernel::Separable(v) => v.second_derivative(x),
        }
    }

    fn eval_grad(&self, x: T, y: T) -> (T, T) {
        match *self {
            BuiltinKernel::Constant(c) => (c, T::zero()),
            BuiltinKernel::Quadratic => {
                let d = x - y;
                (T::lit(0.5) * d * d, d)
            }
            BuiltinKernel::GaussianAttraction { s } => {
                let d = x - y;
                let e = (-T::lit(0.5) * d * d / (s * s)).exp();
                (-e, e * d / (s * s))
            }
            BuiltinKernel::Separable(v) => (v.value(x) + v.value(y), v.derivative(x)),
        }
    }

    fn pair_sums(&self, x: &[T], rows: &mut [T]) -> Option<T> {
        let n = T::of_usize(x.len());
        match *self {
            BuiltinKernel::Constant(c) => {
                rows.iter_mut().for_each(|r| *r = T::zero());
                Some(c * n * n)
            }
            BuiltinKernel::Quadratic => {
                // Σ_i Σ_j (x_i − x_j)²/2 = M Σ_i (x_i − x̄)²
                let mean = x.iter().fold(T::zero(), |acc, &v| acc + v) / n;
                let mut centered = T::zero();
                for (r, &xi) in rows.iter_mut().zip(x) {
                    let d = xi - mean;
                    *r = n * d;
                    centered = centered + d * d;
                }
                Some(n * centered)
            }
            BuiltinKernel::Separable(v) => {
                let mut total = T::zero();
                for (r, &xi) in rows.iter_mut().zip(x) {
                    *r = n * v.derivative(xi);
                    total = total + v.value(xi);
                }
                Some(T::lit(2.0) * n * total)
            }
            BuiltinKernel::GaussianAttraction { .. } => None,
        }
    }
}

/// `a(t) = a₀ + a₁ sin(2πt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation<T> {
    pub a0: T,
    pub a1: T,
}

impl<T: Real> Modulation<T> {
    pub fn constant(a0: T) -> Self {
        Self { a0, a1: T::zero() }
    }

    pub fn value(&self, t: T) -> T {
        self.a0 + self.a1 * (T::TAU() * t).sin()
    }

    pub fn derivative(&self, t: T) -> T {
        self.a1 * T::TAU() * (T::TAU() * t).cos()
    }

    pub fn max_abs(&self) -> T {
        self.a0.abs() + self.a1.abs()
    }
}

/// `W_t(x, y) = a(t)·K(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulated<T, K> {
    pub modulation: Modulation<T>,
    pub kernel: K,
}

impl<T: Real, K: Kernel<T>> TimePotential<T> for Modulated<T, K> {
    fn eval(&self, t: T, x: T, y: T) -> T {
        self.modulation.value(t) * self.kernel.eval(x, y)
    }

    fn grad_x(&self, t: T, x: T, y: T) -> T {
        self.modulation.value(t) * self.kernel.grad_x(x, y)
    }

    fn lap_x(&self, t: T, x: T, y: T) -> T {
        self.modulation.value(t) * self.kernel.lap_x(x, y)
    }

    fn time_derivative(&self, t: T, x: T, y: T) -> T {
        self.modulation.derivative(t) * self.kernel.eval(x, y)
    }

    fn factorized(&self, t: T) -> Option<(T, &dyn Kernel<T>)> {
        Some((self.modulation.value(t), &self.kernel))
    }

    fn is_zero(&self) -> bool {
        self.modulation.a0 == T::zero() && self.modulation.a1 == T::zero()
    }

    fn eval_grad(&self, t: T, x: T, y: T) -> (T, T) {
        let a = self.modulation.value(t);
        let (v, g) = self.kernel.eval_grad(x, y);
        (a * v, a * g)
    }
}

/// `W ≡ 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPotential;

impl<T: Real> TimePotential<T> for ZeroPotential {
    fn eval(&self, _: T, _: T, _: T) -> T {
        T::zero()
    }
    fn grad_x(&self, _: T, _: T, _: T) -> T {
        T::zero()
    }
    fn lap_x(&self, _: T, _: T, _: T) -> T {
        T::zero()
    }
    fn time_derivative(&self, _: T, _: T, _: T) -> T {
        T::zero()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Built-in potential families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialFamily<T> {
    Zero,
    ModulatedQuadratic { a0: T, a1: T },
    ModulatedGaussianAttraction { a0: T, a1: T, s: T },
    SeparableConfinement { a0: T, a1: T, v: Profile },
}

impl<T: Real> PotentialFamily<T> {
    pub fn build(&self) -> Result<SharedPotential<T>> {
        Ok(match *self {
            PotentialFamily::Zero => Arc::new(ZeroPotential),
            PotentialFamily::ModulatedQuadratic { a0, a1 } => {
                if !(a0 > a1.abs()) {
                    return Err(Error::param(
                        "potential.a0",
                        format!("modulated quadratic needs a0 > |a1|, got a0 = {a0}, a1 = {a1}"),
                    ));
                }
                Arc::new(Modulated {
                    modulation: Modulation { a0, a1 },
                    kernel: BuiltinKernel::Quadratic,
                })
            }
            PotentialFamily::ModulatedGaussianAttraction { a0, a1, s } => {
                if !(s > T::zero()) {
                    return Err(Error::param("potential.s", "width s must be positive"));
                }
                Arc::new(Modulated {
                    modulation: Modulation { a0, a1 },
                    kernel: BuiltinKernel::GaussianAttraction { s },
                })
            }
            PotentialFamily::SeparableConfinement { a0, a1, v } => Arc::new(Modulated {
                modulation: Modulation { a0, a1 },
                kernel: BuiltinKernel::Separable(v),
            }),
        })
    }
}

pub type SharedPotential<T> = Arc<dyn TimePotential<T>>;

/// `W(ω t, x, y)`, period `1/ω`.
#[derive(Debug, Clone)]
pub struct Rescaled<T> {
    inner: SharedPotential<T>,
    omega: T,
}

/// Evaluates `W` at frequency `omega`.
pub fn rescale_frequency<T: Real>(w: SharedPotential<T>, omega: T) -> Result<Rescaled<T>> {
    if !(omega > T::zero() && omega.is_finite()) {
        return Err(Error::param("omega", format!("must be positive, got {omega}")));
    }
    Ok(Rescaled { inner: w, omega })
}

impl<T: Real> TimePotential<T> for Rescaled<T> {
    fn eval(&self, t: T, x: T, y: T) -> T {
        self.inner.eval(self.omega * t, x, y)
    }
    fn grad_x(&self, t: T, x: T, y: T) -> T {
        self.inner.grad_x(self.omega * t, x, y)
    }
    fn lap_x(&self, t: T, x: T, y: T) -> T {
        self.inner.lap_x(self.omega * t, x, y)
    }
    fn time_derivative(&self, t: T, x: T, y: T) -> T {
        self.omega * self.inner.time_derivative(self.omega * t, x, y)
    }
    fn period(&self) -> T {
        self.inner.period() / self.omega
    }
    fn factorized(&self, t: T) -> Option<(T, &dyn Kernel<T>)> {
        self.inner.factorized(self.omega * t)
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
    fn eval_grad(&self, t: T, x: T, y: T) -> (T, T) {
        self.inner.eval_grad(self.omega * t, x, y)
    }
}

/// Time average `W̄ = (1/p)∫₀ᵖ W_t dt` over one period `p`.
#[derive(Debug, Clone)]
pub struct Averaged<T> {
    inner: SharedPotential<T>,
    rule: Rule<T>,
    /// Mean amplitude when the potential factorizes.
    mean_amplitude: Option<T>,
}

/// Gauss–Legendre time average with `n_quad` nodes over one period.
pub fn average_potential<T: Real>(w: SharedPotential<T>, n_quad: usize) -> Result<Averaged<T>> {
    if n_quad < 4 {
        return Err(Error::param("n_quad", format!("need at least 4 nodes, got {n_quad}")));
    }
    let p = w.period();
    let inv = T::one() / p;
    let mut rule = Rule::gauss_legendre(n_quad, T::zero(), p);
    for wgt in rule.weights.iter_mut() {
        *wgt = *wgt * inv;
    }
    let mean_amplitude = if w.factorized(T::zero()).is_some() {
        Some(rule.integrate(|t| w.factorized(t).map_or(T::zero(), |(a, _)| a)))
    } else {
        None
    };
    Ok(Averaged {
        inner: w,
        rule,
        mean_amplitude,
    })
}

impl<T: Real> Averaged<T> {
    fn average(&self, f: impl Fn(T) -> T) -> T {
        self.rule.integrate(f)
    }
}

impl<T: Real> TimePotential<T> for Averaged<T> {
    fn eval(&self, _t: T, x: T, y: T) -> T {
        match (self.mean_amplitude, self.inner.factorized(T::zero())) {
            (Some(a), Some((_, k))) => a * k.eval(x, y),
            _ => self.average(|s| self.inner.eval(s, x, y)),
        }
    }
    fn grad_x(&self, _t: T, x: T, y: T) -> T {
        match (self.mean_amplitude, self.inner.factorized(T::zero())) {
            (Some(a), Some((_, k))) => a * k.grad_x(x, y),
            _ => self.average(|s| self.inner.grad_x(s, x, y)),
        }
    }
    fn lap_x(&self, _t: T, x: T, y: T) -> T {
        match (self.mean_amplitude, self.inner.factorized(T::zero())) {
            (Some(a), Some((_, k))) => a * k.lap_x(x, y),
            _ => self.average(|s| self.inner.lap_x(s, x, y)),
        }
    }
    fn time_derivative(&self, _: T, _: T, _: T) -> T {
        T::zero()
    }
    fn factorized(&self, _t: T) -> Option<(T, &dyn Kernel<T>)> {
        match (self.mean_amplitude, self.inner.factorized(T::zero())) {
            (Some(a), Some((_, k))) => Some((a, k)),
            _ => None,
        }
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
    fn eval_grad(&self, t: T, x: T, y: T) -> (T, T) {
        match self.factorized(t) {
            Some((a, k)) => {
                let (v, g) = k.eval_grad(x, y);
                (a * v, a * g)
            }
            None => (self.eval(t, x, y), self.grad_x(t, x, y)),
        }
    }
}

type ScalarFn<T> = Arc<dyn Fn(T, T, T) -> T + Send + Sync>;

/// Potential assembled from closures; derivatives not supplied are zero.
#[derive(Clone)]
pub struct FnPotential<T> {
    eval: ScalarFn<T>,
    grad_x: ScalarFn<T>,
    lap_x: ScalarFn<T>,
    time_derivative: ScalarFn<T>,
    period: T,
}

impl<T: Real> FnPotential<T> {
    pub fn new(eval: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        let zero: ScalarFn<T> = Arc::new(|_, _, _| T::zero());
        Self {
            eval: Arc::new(eval),
            grad_x: zero.clone(),
            lap_x: zero.clone(),
            time_derivative: zero,
            period: T::one(),
        }
    }

    pub fn with_grad_x(mut self, f: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.grad_x = Arc::new(f);
        self
    }

    pub fn with_lap_x(mut self, f: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.lap_x = Arc::new(f);
        self
    }

    pub fn with_time_derivative(mut self, f: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.time_derivative = Arc::new(f);
        self
    }
}

impl<T: Real> fmt::Debug for FnPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential").field("period", &self.period).finish()
    }
}

impl<T: Real> TimePotential<T> for FnPotential<T> {
    fn eval(&self, t: T, x: T, y: T) -> T {
        (self.eval)(t, x, y)
    }
    fn grad_x(&self, t: T, x: T, y: T) -> T {
        (self.grad_x)(t, x, y)
    }
    fn lap_x(&self, t: T, x: T, y: T) -> T {
        (self.lap_x)(t, x, y)
    }
    fn time_derivative(&self, t: T, x: T, y: T) -> T {
        (self.time_derivative)(t, x, y)
    }
    fn period(&self) -> T {
        self.period
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quadratic(a0: f64, a1: f64) -> SharedPotential<f64> {
        PotentialFamily::ModulatedQuadratic { a0, a1 }.build().unwrap()
    }

    #[test]
    fn pair_sums_match_double_loop() {
        let x = [-1.3, -0.2, 0.05, 0.9, 2.4];
        for k in [
            BuiltinKernel::Constant(0.7),
            BuiltinKernel::Quadratic,
            BuiltinKernel::Separable(Profile::Quadratic),
            BuiltinKernel::Separable(Profile::DoubleWell),
        ] {
            let mut rows = [0.0; 5];
            let total = k.pair_sums(&x, &mut rows).unwrap();
            let direct: f64 = x.iter().flat_map(|&a| x.iter().map(move |&b| k.eval(a, b))).sum();
            assert_abs_diff_eq!(total, direct, epsilon = 1e-12);
            for (i, &xi) in x.iter().enumerate() {
                let row: f64 = x.iter().map(|&b| k.grad_x(xi, b)).sum();
                assert_abs_diff_eq!(rows[i], row, epsilon = 1e-12);
            }
        }
        assert!(BuiltinKernel::GaussianAttraction { s: 1.0 }
            .pair_sums(&x, &mut [0.0; 5])
            .is_none());
    }

    #[test]
    fn modulation_at_quarter_period() {
        let m = Modulation { a0: 1.0, a1: 1.0 };
        assert_abs_diff_eq!(m.value(0.25), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.value(0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rescaled_evaluates_at_scaled_time() {
        let w = quadratic(1.0, 1.0 - 1e-12);
        let r = rescale_frequency(w.clone(), 2.0).unwrap();
        // a(0.5) = 1 up to sin(π) round-off
        assert_abs_diff_eq!(r.eval(0.25, 1.0, 0.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.period(), 0.5, epsilon = 1e-15);
        let id = rescale_frequency(w.clone(), 1.0).unwrap();
        assert_eq!(id.eval(0.3, 0.2, -0.7), w.eval(0.3, 0.2, -0.7));
        assert!(rescale_frequency(w, 0.0).is_err());
    }

    #[test]
    fn rescaled_time_derivative_picks_up_omega() {
        let w = quadratic(1.0, 0.5);
        let r = rescale_frequency(w.clone(), 3.0).unwrap();
        let t = 0.17;
        let h = 1e-6;
        let fd = (r.eval(t + h, 0.4, -0.3) - r.eval(t - h, 0.4, -0.3)) / (2.0 * h);
        assert_abs_diff_eq!(r.time_derivative(t, 0.4, -0.3), fd, epsilon = 1e-6);
    }

    #[test]
    fn average_removes_sine_modulation() {
        let w = quadratic(1.0, 0.9);
        let avg = average_potential(w, 8).unwrap();
        assert_abs_diff_eq!(avg.eval(0.0, 1.5, -0.5), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(avg.grad_x(0.3, 1.5, -0.5), 2.0, epsilon = 1e-12);
        assert_eq!(avg.time_derivative(0.3, 1.0, 2.0), 0.0);
    }

    #[test]
    fn average_of_cos_squared_modulation() {
        let tau = std::f64::consts::TAU;
        let w: SharedPotential<f64> = Arc::new(FnPotential::new(move |t: f64, x: f64, y: f64| {
            (1.0 + (tau * t).cos().powi(2)) * (x - y).powi(2)
        }));
        let avg = average_potential(w, 32).unwrap();
        assert_abs_diff_eq!(avg.eval(0.0, 1.0, 0.0), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn average_of_constant_in_time_is_identity() {
        let w = PotentialFamily::ModulatedGaussianAttraction {
            a0: 1.3,
            a1: 0.0,
            s: 0.7,
        }
        .build()
        .unwrap();
        let avg = average_potential(w.clone(), 16).unwrap();
        for (x, y) in [(0.0, 0.0), (1.0, -2.0), (0.3, 0.1)] {
            assert_abs_diff_eq!(avg.eval(0.0, x, y), w.eval(0.4, x, y), epsilon = 1e-14);
        }
    }

    #[test]
    fn average_rejects_too_few_nodes() {
        assert!(average_potential(quadratic(1.0, 0.0), 3).is_err());
    }

    #[test]
    fn quadratic_family_requires_positive_amplitude() {
        assert!(PotentialFamily::ModulatedQuadratic { a0: 0.5, a1: 0.8 }
            .build()
            .is_err());
    }

    #[test]
    fn double_well_derivatives() {
        let k = BuiltinKernel::Separable(Profile::DoubleWell);
        let h = 1e-5;
        for x in [-1.7, -0.3, 0.0, 0.8, 2.1] {
            let fd = (k.eval(x + h, 0.4) - k.eval(x - h, 0.4)) / (2.0 * h);
            assert_abs_diff_eq!(k.grad_x(x, 0.4), fd, epsilon = 1e-8);
            let fd2 = (k.grad_x(x + h, 0.4) - k.grad_x(x - h, 0.4)) / (2.0 * h);
            assert_abs_diff_eq!(k.lap_x(x, 0.4), fd2, epsilon = 1e-7);
        }
    }

    #[test]
    fn profile_names_round_trip() {
        for p in [Profile::Quadratic, Profile::DoubleWell] {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert!("cubic".parse::<Profile>().is_err());
    }
}
