use super::{MetricSpace, MinimizerOracle, PerturbedEnergy};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `ℝⁿ` with `E(u) = ½‖u‖²` and `P_t(u) = ε sin(2πωt)⟨b, u⟩`; every
/// quantity of the scheme is available in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanDemo<T> {
    pub eps: T,
    pub b: Vec<T>,
    pub omega: T,
}

impl<T: Real> EuclideanDemo<T> {
    pub fn new(eps: T, b: Vec<T>, omega: T) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::param("b", "direction must be nonempty"));
        }
        if !(omega > T::zero()) {
            return Err(Error::param("omega", format!("must be positive, got {omega}")));
        }
        Ok(Self { eps, b, omega })
    }

    pub fn dimension(&self) -> usize {
        self.b.len()
    }

    fn forcing(&self, t: T) -> T {
        self.eps * (T::TAU() * self.omega * t).sin()
    }

    /// `c(t) = ε sin(2πωt) b`, the gradient of `P_t`.
    pub fn forcing_vector(&self, t: T) -> Vec<T> {
        let s = self.forcing(t);
        self.b.iter().map(|&bi| s * bi).collect()
    }

    /// Closed-form resolvent `(u − τ c(t))/(1 + τ)`.
    pub fn resolvent(&self, tau: T, t: T, u: &[T]) -> Vec<T> {
        let s = self.forcing(t);
        let den = T::one() + tau;
        u.iter()
            .zip(&self.b)
            .map(|(&ui, &bi)| (ui - tau * s * bi) / den)
            .collect()
    }

    /// Closed-form `φ(τ, t, u) = ‖u + c‖²/(2(1 + τ)) − ½‖c‖²`.
    pub fn moreau_yosida(&self, tau: T, t: T, u: &[T]) -> T {
        let c = self.forcing_vector(t);
        let upc: T = u.iter().zip(&c).map(|(&a, &b)| (a + b) * (a + b)).sum();
        let cc: T = c.iter().map(|&a| a * a).sum();
        upc / (T::lit(2.0) * (T::one() + tau)) - T::lit(0.5) * cc
    }

    /// `‖∇(E + P_t)(v)‖ = ‖v + c(t)‖`, the exact local slope.
    pub fn slope(&self, t: T, v: &[T]) -> T {
        let c = self.forcing_vector(t);
        v.iter().zip(&c).map(|(&a, &b)| (a + b) * (a + b)).sum::<T>().sqrt()
    }

    /// Residual of `(v − u)/τ + v + c(t) = 0`.
    pub fn optimality_residual(&self, tau: T, t: T, u: &[T], v: &[T]) -> T {
        let c = self.forcing_vector(t);
        u.iter()
            .zip(v)
            .zip(&c)
            .map(|((&ui, &vi), &ci)| ((vi - ui) / tau + vi + ci).abs())
            .fold(T::zero(), T::max)
    }

    /// `∫₀ᵗ e^{−(t−s)} sin(ks) ds` with `k = 2πω`.
    pub fn forcing_response(&self, t: T) -> T {
        let k = T::TAU() * self.omega;
        ((k * t).sin() - k * (k * t).cos() + k * (-t).exp()) / (T::one() + k * k)
    }

    /// Solution of `u′ = −u − ε sin(2πωt) b`, `u(0) = u0`.
    pub fn exact_solution(&self, t: T, u0: &[T]) -> Vec<T> {
        let decay = (-t).exp();
        let i = self.eps * self.forcing_response(t);
        u0.iter().zip(&self.b).map(|(&u, &bi)| decay * u - i * bi).collect()
    }

    /// Solution of the averaged flow `u′ = −u`.
    pub fn averaged_solution(&self, t: T, u0: &[T]) -> Vec<T> {
        let decay = (-t).exp();
        u0.iter().map(|&u| decay * u).collect()
    }

    /// Same space with the perturbation switched off.
    pub fn averaged(&self) -> Self {
        Self {
            eps: T::zero(),
            ..self.clone()
        }
    }

    pub fn norm(v: &[T]) -> T {
        v.iter().map(|&a| a * a).sum::<T>().sqrt()
    }
}

impl<T: Real> MetricSpace<T> for EuclideanDemo<T> {
    type Point = Vec<T>;

    fn distance(&self, u: &Vec<T>, v: &Vec<T>) -> T {
        u.iter().zip(v).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
    }
}

impl<T: Real> PerturbedEnergy<T, Vec<T>> for EuclideanDemo<T> {
    fn energy(&self, u: &Vec<T>) -> Result<T> {
        Ok(T::lit(0.5) * u.iter().map(|&a| a * a).sum::<T>())
    }

    fn perturbation(&self, t: T, u: &Vec<T>) -> Result<T> {
        Ok(self.forcing(t) * dot(&self.b, u))
    }

    fn perturbation_rate(&self, t: T, u: &Vec<T>) -> Result<T> {
        let k = T::TAU() * self.omega;
        Ok(self.eps * k * (k * t).cos() * dot(&self.b, u))
    }

    fn mean_perturbation(&self, _u: &Vec<T>) -> Option<Result<T>> {
        Some(Ok(T::zero()))
    }
}

impl<T: Real> MinimizerOracle<T, Vec<T>> for EuclideanDemo<T> {
    fn solve(&self, tau: T, t: T, u: &Vec<T>) -> Result<Vec<T>> {
        if u.len() != self.b.len() {
            return Err(Error::param("u", format!("dimension {} != {}", u.len(), self.b.len())));
        }
        Ok(self.resolvent(tau, t, u))
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unforced_iterates_are_geometric() {
        let demo = EuclideanDemo::new(0.0, vec![1.0], 1.0).unwrap();
        let tau: f64 = 0.05;
        let run = run_scheme(&demo, &demo, &demo, vec![1.0], &TauSchedule::Uniform(tau), 1.0, 0.1).unwrap();
        assert_eq!(run.records.len(), 20);
        for r in &run.records {
            assert_abs_diff_eq!(r.u[0], (1.0 + tau).powi(-(r.k as i32)), epsilon = 1e-14);
        }
    }

    #[test]
    fn single_unit_step_halves() {
        let demo = EuclideanDemo::new(0.7, vec![1.0], 1.0).unwrap();
        assert_abs_diff_eq!(demo.solve(1.0, 0.0, &vec![1.0]).unwrap()[0], 0.5, epsilon = 1e-16);
    }

    #[test]
    fn resolvent_is_stationary_point() {
        let demo = EuclideanDemo::new(0.5, vec![0.3, -1.2], 3.0).unwrap();
        let u = vec![0.8, 0.1];
        let v = demo.solve(0.03, 0.37, &u).unwrap();
        assert!(demo.optimality_residual(0.03, 0.37, &u, &v) <= 1e-12);
        // slope surrogate is attained with equality
        assert_abs_diff_eq!(demo.slope(0.37, &v), demo.distance(&u, &v) / 0.03, epsilon = 1e-12);
    }

    #[test]
    fn forced_scheme_tracks_ode() {
        let demo = EuclideanDemo::new(0.5f64, vec![1.0], 4.0).unwrap();
        let tau = 1e-3;
        let u0 = vec![1.0];
        let run = run_scheme(&demo, &demo, &demo, u0.clone(), &TauSchedule::Uniform(tau), 1.0, 0.1).unwrap();
        let err = run
            .records
            .iter()
            .map(|r| (r.u[0] - demo.exact_solution(r.t, &u0)[0]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5.0 * tau, "{err}");
    }

    #[test]
    fn exact_solution_solves_ode() {
        let demo = EuclideanDemo::new(0.5, vec![1.0], 2.0).unwrap();
        let u0 = vec![0.4];
        let (t, h) = (0.63, 1e-6);
        let du = (demo.exact_solution(t + h, &u0)[0] - demo.exact_solution(t - h, &u0)[0]) / (2.0 * h);
        let u = demo.exact_solution(t, &u0)[0];
        let rhs = -u - demo.forcing_vector(t)[0];
        assert_abs_diff_eq!(du, rhs, epsilon = 1e-8);
        assert_abs_diff_eq!(demo.exact_solution(0.0, &u0)[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_phi_matches_resolvent() {
        let demo = EuclideanDemo::new(0.5, vec![1.0, 2.0], 1.0).unwrap();
        let u = vec![0.3, -0.4];
        for tau in [1e-3, 0.1, 1.0] {
            let v = demo.solve(tau, 0.2, &u).unwrap();
            let d = demo.distance(&u, &v);
            let phi = d * d / (2.0 * tau) + demo.energy(&v).unwrap() + demo.perturbation(0.2, &v).unwrap();
            assert_abs_diff_eq!(phi, demo.moreau_yosida(tau, 0.2, &u), epsilon = 1e-14);
        }
    }
}
