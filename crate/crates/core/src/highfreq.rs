//! Frequency sweeps: distance between the oscillating flow and the flow of
//! the time-averaged potential, and power-law fits of that distance in `ω`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::density::Density;
use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::jko::{
    classical_estimates_fp, h1_monitor, max_w2_between, run_jko, trajectory_holder_modulus, JkoConfig, Trajectory,
};
use crate::mms::{run_scheme, EuclideanDemo, MetricSpace, TauSchedule, DEFAULT_TAU_CAP};
use crate::potentials::{average_potential, SharedPotential};
use crate::scalar::Real;

/// Gauss–Legendre nodes used for the time average of the potential.
pub const AVERAGE_NODES: usize = 16;

/// Errors at or below this are treated as exact zeros by [`fit_rate`].
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit<T> {
    pub slope: T,
    pub constant: T,
}

/// A priori monitors of one oscillating run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMonitors<T> {
    pub omega: T,
    pub dissipation_sum: T,
    pub max_energy: T,
    pub max_second_moment: T,
    pub h1: T,
    pub holder: T,
    pub inner_iterations: usize,
}

impl<T: Real> RunMonitors<T> {
    pub fn names() -> [&'static str; 5] {
        [
            "dissipation_sum",
            "max_energy",
            "max_second_moment",
            "h1_monitor",
            "holder_modulus",
        ]
    }

    pub fn values(&self) -> [T; 5] {
        [
            self.dissipation_sum,
            self.max_energy,
            self.max_second_moment,
            self.h1,
            self.holder,
        ]
    }

    fn of(omega: T, traj: &Trajectory<T>, spec: &EnergySpec<T>) -> Result<Self> {
        let fp = classical_estimates_fp(traj, spec)?;
        Ok(Self {
            omega,
            dissipation_sum: fp.scheme.dissipation_sum,
            max_energy: fp.max_energy,
            max_second_moment: fp.max_second_moment,
            h1: h1_monitor(traj, spec)?,
            holder: trajectory_holder_modulus(traj)?,
            inner_iterations: traj.inner.iter().map(|s| s.iterations).sum(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub omegas: Vec<T>,
    /// `e(ω) = max_k W₂(ρ_ω(t_k), ρ_∞(t_k))`
    pub errors: Vec<T>,
    /// Fit over the upper half of the sweep; `None` when too few errors
    /// clear the noise floor.
    pub fit: Option<RateFit<T>>,
    pub monitors: Vec<RunMonitors<T>>,
}

impl<T: Real> SweepResult<T> {
    /// `max/min` over `ω` of each monitor, in [`RunMonitors::names`] order.
    pub fn monitor_ratios(&self) -> [T; 5] {
        let mut out = [T::zero(); 5];
        for (c, slot) in out.iter_mut().enumerate() {
            let vals = self.monitors.iter().map(|m| m.values()[c].abs());
            let (lo, hi) = vals.fold((T::infinity(), T::zero()), |(lo, hi), v| (lo.min(v), hi.max(v)));
            *slot = if lo > T::zero() { hi / lo } else { T::infinity() };
        }
        out
    }
}

fn check_omegas<T: Real>(omegas: &[T]) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::param("omegas", "need at least one frequency"));
    }
    if omegas.iter().any(|&w| !(w > T::zero() && w.is_finite())) {
        return Err(Error::param("omegas", "frequencies must be positive"));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("omegas", "frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Fit over the upper `⌈n/2⌉` points.
fn upper_half_fit<T: Real>(omegas: &[T], errors: &[T]) -> Option<RateFit<T>> {
    let start = omegas.len() / 2;
    fit_rate(&omegas[start..], &errors[start..]).ok()
}

/// Runs the averaged problem once and every `ω` in parallel on the shared
/// schedule of `cfg`. A failing run aborts the sweep; the error carries the
/// `(ω, e(ω))` pairs that completed.
pub fn sweep_omega<T: Real>(
    rho0: &Density<T>,
    potential: SharedPotential<T>,
    m: T,
    omegas: &[T],
    cfg: &JkoConfig<T>,
) -> Result<SweepResult<T>> {
    check_omegas(omegas)?;
    let averaged: SharedPotential<T> = Arc::new(average_potential(potential.clone(), AVERAGE_NODES)?);
    let avg_spec = EnergySpec::new(m, averaged, T::one())?;
    let reference = run_jko(rho0, &avg_spec, cfg).map_err(|e| Error::SweepAborted {
        omega: 0.0,
        completed: Vec::new(),
        source: Box::new(e),
    })?;
    let runs: Vec<Result<(T, RunMonitors<T>)>> = omegas
        .par_iter()
        .map(|&omega| {
            let spec = EnergySpec::new(m, potential.clone(), omega)?;
            let traj = run_jko(rho0, &spec, cfg)?;
            let err = max_w2_between(&traj, &reference)?;
            Ok((err, RunMonitors::of(omega, &traj, &spec)?))
        })
        .collect();
    let completed: Vec<(f64, f64)> = omegas
        .iter()
        .zip(&runs)
        .filter_map(|(w, r)| r.as_ref().ok().map(|(e, _)| (w.as_f64(), e.as_f64())))
        .collect();
    let mut errors = Vec::with_capacity(omegas.len());
    let mut monitors = Vec::with_capacity(omegas.len());
    for (&omega, run) in omegas.iter().zip(runs) {
        match run {
            Ok((e, mon)) => {
                errors.push(e);
                monitors.push(mon);
            }
            Err(source) => {
                return Err(Error::SweepAborted {
                    omega: omega.as_f64(),
                    completed,
                    source: Box::new(source),
                })
            }
        }
    }
    let fit = upper_half_fit(omegas, &errors);
    Ok(SweepResult {
        omegas: omegas.to_vec(),
        errors,
        fit,
        monitors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanSweep<T> {
    pub omegas: Vec<T>,
    /// Exact ODE distance `ε‖b‖ max_k |∫₀^{t_k} e^{−(t_k−s)} sin(2πωs) ds|`.
    pub analytic: Vec<T>,
    /// Distance between the forced and unforced discrete schemes.
    pub scheme: Vec<T>,
    pub analytic_fit: Option<RateFit<T>>,
    pub scheme_fit: Option<RateFit<T>>,
    /// `max_ω |scheme − analytic|`
    pub max_gap: T,
}

/// Same pipeline on the Euclidean demo, with the exact solution as a
/// second reference.
pub fn sweep_omega_euclidean<T: Real>(
    u0: &[T],
    eps: T,
    b: &[T],
    omegas: &[T],
    tau: T,
    t_end: T,
) -> Result<EuclideanSweep<T>> {
    check_omegas(omegas)?;
    if u0.len() != b.len() {
        return Err(Error::param("u0", format!("dimension {} != {}", u0.len(), b.len())));
    }
    let schedule = TauSchedule::Uniform(tau);
    let cap = T::lit(DEFAULT_TAU_CAP).max(tau);
    let base = EuclideanDemo::new(T::zero(), b.to_vec(), T::one())?;
    let reference = run_scheme(&base, &base, &base, u0.to_vec(), &schedule, t_end, cap)?;
    let b_norm = EuclideanDemo::norm(b);
    let mut analytic = Vec::with_capacity(omegas.len());
    let mut scheme = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let demo = EuclideanDemo::new(eps, b.to_vec(), omega)?;
        let run = run_scheme(&demo, &demo, &demo, u0.to_vec(), &schedule, t_end, cap)?;
        let mut e_scheme = T::zero();
        let mut e_exact = T::zero();
        for ((t, u), (_, v)) in run.states().zip(reference.states()) {
            e_scheme = e_scheme.max(demo.distance(u, v));
            e_exact = e_exact.max((eps * demo.forcing_response(t)).abs() * b_norm);
        }
        scheme.push(e_scheme);
        analytic.push(e_exact);
    }
    let max_gap = scheme
        .iter()
        .zip(&analytic)
        .fold(T::zero(), |acc, (&s, &a)| acc.max((s - a).abs()));
    Ok(EuclideanSweep {
        omegas: omegas.to_vec(),
        analytic_fit: upper_half_fit(omegas, &analytic),
        scheme_fit: upper_half_fit(omegas, &scheme),
        analytic,
        scheme,
        max_gap,
    })
}

/// Least squares of `log e` against `log ω`; returns the slope and
/// `exp(intercept)`. Points with `e ≤ 1e−14` are dropped.
pub fn fit_rate<T: Real>(omegas: &[T], errors: &[T]) -> Result<RateFit<T>> {
    if omegas.len() != errors.len() {
        return Err(Error::param("errors", "one error per frequency required"));
    }
    let floor = T::lit(NOISE_FLOOR);
    let pts: Vec<(T, T)> = omegas
        .iter()
        .zip(errors)
        .filter(|(&w, &e)| w > T::zero() && e > floor)
        .map(|(&w, &e)| (w.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints(pts.len()));
    }
    let n = T::of_usize(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    if !(sxx > T::zero()) {
        return Err(Error::param("omegas", "need at least two distinct frequencies"));
    }
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        constant: (my - slope * mx).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Grid;
    use crate::potentials::{PotentialFamily, Profile};
    use crate::profiles::gaussian_pdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_laws() {
        let w = [1.0, 2.0, 4.0, 8.0, 16.0];
        let e: Vec<f64> = w.iter().map(|x: &f64| x.powf(-0.5)).collect();
        let fit = fit_rate(&w, &e).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.constant, 1.0, epsilon = 1e-10);
        let e: Vec<f64> = w.iter().map(|x| 3.0 / x).collect();
        let fit = fit_rate(&w, &e).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.constant, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_floor_points_dropped() {
        let w = [1.0, 2.0, 4.0, 8.0];
        assert!(matches!(
            fit_rate(&w, &[1.0, 0.5, 0.0, 1e-15]),
            Err(Error::InsufficientPoints(2))
        ));
        assert!(fit_rate(&w, &[1.0, 0.5, 0.25]).is_err());
    }

    #[test]
    fn unforced_euclidean_sweep_is_zero() {
        let s = sweep_omega_euclidean(&[1.0, -0.5], 0.0, &[1.0, 1.0], &[1.0, 2.0, 4.0], 1e-2, 0.5).unwrap();
        assert!(s.analytic.iter().chain(&s.scheme).all(|&e| e == 0.0));
        assert!(s.analytic_fit.is_none());
    }

    #[test]
    fn rejects_unsorted_frequencies() {
        assert!(sweep_omega_euclidean(&[1.0], 0.1, &[1.0], &[2.0, 1.0], 1e-2, 0.1).is_err());
        assert!(sweep_omega_euclidean(&[1.0], 0.1, &[1.0], &[], 1e-2, 0.1).is_err());
    }

    #[test]
    fn time_independent_potential_has_no_oscillation_error() {
        let grid = Grid::new(-5.0, 5.0, 100).unwrap();
        let rho0 = Density::from_fn(grid, |x| gaussian_pdf(x, 0.3, 0.5)).unwrap();
        let w = PotentialFamily::SeparableConfinement {
            a0: 1.0,
            a1: 0.0,
            v: Profile::Quadratic,
        }
        .build()
        .unwrap();
        let cfg = JkoConfig::new(grid, 60, 1e-2, 0.1);
        let s = sweep_omega(&rho0, w, 1.0, &[1.0, 4.0], &cfg).unwrap();
        assert!(s.errors.iter().all(|&e| e <= 1e-9), "{:?}", s.errors);
        assert_eq!(s.monitors.len(), 2);
    }
}
