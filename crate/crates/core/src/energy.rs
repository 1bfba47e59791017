//! Free energies of particle configurations and their exact gradients.
//!
//! A configuration `X_1 < … < X_M` carries mass `1/M` per particle; the
//! density on the gap `[X_i, X_{i+1}]` is `ρ_i = 1/(M (X_{i+1} − X_i))`.

use std::fmt;

use rayon::prelude::*;

use crate::density::{Density, QuantileRep};
use crate::error::{Error, Result};
use crate::potentials::{SharedPotential, TimePotential};
use crate::scalar::{ordered_sum, Real};

/// Row counts below this run the pair sums sequentially.
const PARALLEL_ROWS: usize = 256;

/// Diffusion exponent, potential and oscillation frequency of
/// `F_t(ρ) = U_m(ρ) + 𝒲_{ωt}(ρ)`.
#[derive(Clone)]
pub struct EnergySpec<T> {
    pub m: T,
    pub potential: SharedPotential<T>,
    pub omega: T,
}

impl<T: Real> fmt::Debug for EnergySpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergySpec")
            .field("m", &self.m)
            .field("potential", &self.potential)
            .field("omega", &self.omega)
            .finish()
    }
}

impl<T: Real> EnergySpec<T> {
    pub fn new(m: T, potential: SharedPotential<T>, omega: T) -> Result<Self> {
        if !(m >= T::one()) {
            return Err(Error::param("m", format!("m must be ≥ 1, got {m}")));
        }
        if !(omega > T::zero() && omega.is_finite()) {
            return Err(Error::param("omega", format!("must be positive, got {omega}")));
        }
        Ok(Self { m, potential, omega })
    }

    /// Argument at which the potential is evaluated at physical time `t`.
    pub fn potential_time(&self, t: T) -> T {
        self.omega * t
    }

    pub fn internal(&self, x: &[T]) -> Result<T> {
        internal_energy_of(x, self.m)
    }

    pub fn interaction(&self, x: &[T], t: T) -> T {
        interaction_energy_of(x, self.potential.as_ref(), self.potential_time(t))
    }

    pub fn total(&self, x: &[T], t: T) -> Result<T> {
        Ok(self.internal(x)? + self.interaction(x, t))
    }

    /// `d/dt 𝒲_{ωt}(X)`.
    pub fn interaction_time_derivative(&self, x: &[T], t: T) -> T {
        if self.potential.is_zero() {
            return T::zero();
        }
        let s = self.potential_time(t);
        let w = self.potential.as_ref();
        let rows = pair_rows(x, |xi, xj| w.time_derivative(s, xi, xj));
        self.omega * ordered_sum(&rows) * half_inv_m2::<T>(x.len())
    }

    /// Gradient of `total` written into `out`; returns the energy.
    pub fn total_with_gradient(&self, x: &[T], t: T, out: &mut [T]) -> Result<T> {
        let e_int = internal_energy_of(x, self.m)?;
        internal_gradient_into(x, self.m, out);
        let e_w = self.interaction_with_gradient(x, t, out);
        Ok(e_int + e_w)
    }

    /// Adds the interaction gradient to `out`; returns the interaction energy.
    fn interaction_with_gradient(&self, x: &[T], t: T, out: &mut [T]) -> T {
        if self.potential.is_zero() {
            return T::zero();
        }
        let s = self.potential_time(t);
        let w = self.potential.as_ref();
        let m = x.len();
        if let Some((a, k)) = w.factorized(s) {
            if a == T::zero() {
                return T::zero();
            }
            let mut rows = vec![T::zero(); m];
            if let Some(total) = k.pair_sums(x, &mut rows) {
                let scale = a / T::of_usize(m * m);
                for (o, &r) in out.iter_mut().zip(&rows) {
                    *o = *o + scale * r;
                }
                return a * total * half_inv_m2::<T>(m);
            }
        }
        let row = |i: usize| {
            let xi = x[i];
            let (mut e, mut g) = (T::zero(), T::zero());
            for &xj in x {
                let (v, d) = w.eval_grad(s, xi, xj);
                e = e + v;
                g = g + d;
            }
            (e, g)
        };
        let rows: Vec<(T, T)> = if m >= PARALLEL_ROWS {
            (0..m).into_par_iter().map(row).collect()
        } else {
            (0..m).map(row).collect()
        };
        let inv_m2 = T::one() / T::of_usize(m * m);
        let mut e = T::zero();
        for (o, &(ei, gi)) in out.iter_mut().zip(&rows) {
            *o = *o + gi * inv_m2;
            e = e + ei;
        }
        e * half_inv_m2::<T>(m)
    }
}

fn half_inv_m2<T: Real>(m: usize) -> T {
    T::lit(0.5) / T::of_usize(m * m)
}

/// Row sums `Σ_j f(X_i, X_j)`, parallel over `i` for large `M`; each row is
/// summed in index order so results do not depend on the thread count.
fn pair_rows<T: Real>(x: &[T], f: impl Fn(T, T) -> T + Sync) -> Vec<T> {
    let row = |&xi: &T| x.iter().fold(T::zero(), |acc, &xj| acc + f(xi, xj));
    if x.len() >= PARALLEL_ROWS {
        x.par_iter().map(row).collect()
    } else {
        x.iter().map(row).collect()
    }
}

/// `ℋ` for `m = 1`, `𝒰_m` for `m > 1`.
pub fn internal_energy<T: Real>(q: &QuantileRep<T>, m: T) -> Result<T> {
    internal_energy_of(q.positions(), m)
}

pub(crate) fn internal_energy_of<T: Real>(x: &[T], m: T) -> Result<T> {
    let n = T::of_usize(x.len());
    let mut acc = T::zero();
    let linear = m == T::one();
    for (i, w) in x.windows(2).enumerate() {
        let g = w[1] - w[0];
        if !(g > T::zero()) {
            return Err(Error::NotIncreasing {
                index: i,
                gap: g.as_f64(),
            });
        }
        let mg = n * g;
        acc = acc + if linear { -mg.ln() } else { mg.powf(T::one() - m) };
    }
    Ok(if linear { acc / n } else { acc / (n * (m - T::one())) })
}

/// Writes `∂U/∂X_i` into `out` (overwriting).
pub(crate) fn internal_gradient_into<T: Real>(x: &[T], m: T, out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    let n = T::of_usize(x.len());
    for i in 0..x.len().saturating_sub(1) {
        // ∂U/∂g_i = −ρ_i^m
        let rho = T::one() / (n * (x[i + 1] - x[i]));
        let p = gap_pressure(rho, m);
        out[i] = out[i] + p;
        out[i + 1] = out[i + 1] - p;
    }
}

#[inline]
pub(crate) fn gap_pressure<T: Real>(rho: T, m: T) -> T {
    if m == T::one() {
        rho
    } else if m == T::lit(2.0) {
        rho * rho
    } else {
        rho.powf(m)
    }
}

/// `(1/(2M²)) Σ_i Σ_j W_t(X_i, X_j)`, self pairs included. `t` is the
/// potential's own time argument.
pub fn interaction_energy<T: Real>(q: &QuantileRep<T>, w: &dyn TimePotential<T>, t: T) -> T {
    interaction_energy_of(q.positions(), w, t)
}

pub(crate) fn interaction_energy_of<T: Real>(x: &[T], w: &dyn TimePotential<T>, t: T) -> T {
    if w.is_zero() {
        return T::zero();
    }
    if let Some((a, k)) = w.factorized(t) {
        let mut rows = vec![T::zero(); x.len()];
        if let Some(total) = k.pair_sums(x, &mut rows) {
            return a * total * half_inv_m2::<T>(x.len());
        }
    }
    let rows = pair_rows(x, |xi, xj| w.eval(t, xi, xj));
    ordered_sum(&rows) * half_inv_m2::<T>(x.len())
}

/// `(1/M²) Σ_j ∇_x W_t(X_i, X_j)` for every `i`.
pub fn interaction_gradient<T: Real>(q: &QuantileRep<T>, w: &dyn TimePotential<T>, t: T) -> Vec<T> {
    let x = q.positions();
    if w.is_zero() {
        return vec![T::zero(); x.len()];
    }
    let inv = T::one() / T::of_usize(x.len() * x.len());
    pair_rows(x, |xi, xj| w.grad_x(t, xi, xj))
        .into_iter()
        .map(|g| g * inv)
        .collect()
}

/// `F_{t,ω}(X) = U_m(X) + 𝒲_{ωt}(X)`.
pub fn total_energy<T: Real>(q: &QuantileRep<T>, spec: &EnergySpec<T>, t: T) -> Result<T> {
    spec.total(q.positions(), t)
}

/// Exact gradient of [`total_energy`] with respect to the positions.
pub fn energy_gradient<T: Real>(q: &QuantileRep<T>, spec: &EnergySpec<T>, t: T) -> Result<Vec<T>> {
    let mut g = vec![T::zero(); q.len()];
    spec.total_with_gradient(q.positions(), t, &mut g)?;
    Ok(g)
}

/// Discrete `‖∂_x ρ^{m/2}‖²_{L²}` by forward differences.
pub fn h1_seminorm<T: Real>(rho: &Density<T>, m: T) -> T {
    h1_seminorm_values(rho.values(), rho.grid().h(), m)
}

/// [`h1_seminorm`] on raw cell values, which need not have unit mass.
pub fn h1_seminorm_values<T: Real>(values: &[T], h: T, m: T) -> T {
    let half_m = m * T::lit(0.5);
    let pw = |v: T| if v > T::zero() { v.powf(half_m) } else { T::zero() };
    values
        .windows(2)
        .map(|w| {
            let d = (pw(w[1]) - pw(w[0])) / h;
            d * d
        })
        .sum::<T>()
        * h
}
