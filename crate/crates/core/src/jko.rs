//! Minimizing movements in the 1D Wasserstein space, computed in quantile
//! coordinates where the transport cost is an exact quadratic.

use std::sync::Mutex;

use log::{debug, warn};

use crate::density::{density_to_quantiles, moments, quantiles_to_density, Density, Grid, QuantileRep};
use crate::energy::{gap_pressure, h1_seminorm, internal_energy_of, EnergySpec};
use crate::error::{Error, Result};
use crate::mms::{
    classical_estimates, replay_scheme, run_scheme, Ceilings, DiagnosticsReport, MetricSpace, MinimizerOracle,
    PerturbedEnergy, SchemeRun, StepRecord, TauSchedule, DEFAULT_TAU_CAP,
};
use crate::scalar::Real;
use crate::transport::{holder_modulus, w2_positions, w2_sq_unchecked};

/// Search direction of the inner minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMethod {
    /// Steepest descent with Armijo backtracking; trial lengths come from a
    /// secant estimate along the previous direction.
    #[default]
    GradientDescent,
    /// Steepest descent in a metric given by the tridiagonal Hessian of the
    /// transport and internal terms, frozen at the warm start and refreshed
    /// only when progress stalls. Converges in a handful of iterations, so
    /// the final residual is not proportional to the tolerance.
    Preconditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JkoConfig<T> {
    pub grid: Grid<T>,
    pub n_particles: usize,
    pub schedule: TauSchedule<T>,
    pub t_end: T,
    pub tau_cap: T,
    /// Stop when the gradient sup-norm drops below this.
    pub inner_tol: T,
    pub inner_max_iter: usize,
    pub armijo_c: T,
    pub armijo_shrink: T,
    pub method: InnerMethod,
}

impl<T: Real> JkoConfig<T> {
    /// Defaults: `inner_tol = 1e−8/M`, 5000 iterations, Armijo `c = 1e−4`,
    /// shrink `½`.
    pub fn new(grid: Grid<T>, n_particles: usize, tau: T, t_end: T) -> Self {
        Self {
            grid,
            n_particles,
            schedule: TauSchedule::Uniform(tau),
            t_end,
            tau_cap: T::lit(DEFAULT_TAU_CAP),
            inner_tol: T::lit(1e-8) / T::of_usize(n_particles.max(1)),
            inner_max_iter: 5000,
            armijo_c: T::lit(1e-4),
            armijo_shrink: T::lit(0.5),
            method: InnerMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::param("transport.M", "need at least 2 particles"));
        }
        if !(self.inner_tol > T::zero()) {
            return Err(Error::param("solver.inner_tol", "must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::param("solver.inner_max_iter", "must be positive"));
        }
        if !(self.armijo_c > T::zero() && self.armijo_c < T::one()) {
            return Err(Error::param("armijo_c", "must lie in (0, 1)"));
        }
        if !(self.armijo_shrink > T::zero() && self.armijo_shrink < T::one()) {
            return Err(Error::param("armijo_shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Convergence record of one inner minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStats {
    pub iterations: usize,
    pub initial_grad_norm: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// `J(X) = (1/(2τM)) Σ (X_i − Y_i)² + U_m(X) + 𝒲_{ωt}(X)`.
struct Objective<'a, T> {
    y: &'a [T],
    tau: T,
    t: T,
    spec: &'a EnergySpec<T>,
}

impl<T: Real> Objective<'_, T> {
    fn transport_weight(&self) -> T {
        T::one() / (self.tau * T::of_usize(self.y.len()))
    }

    fn value_grad(&self, x: &[T], g: &mut [T]) -> Result<T> {
        let e = self.spec.total_with_gradient(x, self.t, g)?;
        let w = self.transport_weight();
        for ((gi, &xi), &yi) in g.iter_mut().zip(x).zip(self.y) {
            *gi = *gi + w * (xi - yi);
        }
        Ok(T::lit(0.5) * w * sq_dist(x, self.y) + e)
    }
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Tridiagonal `D + Dᵀ diag(c) D` with `D` the forward difference.
struct Preconditioner<T> {
    diag: Vec<T>,
    off: Vec<T>,
    work: Vec<T>,
}

impl<T: Real> Preconditioner<T> {
    fn build(x: &[T], m: T, shift: T) -> Self {
        let n = x.len();
        let nf = T::of_usize(n);
        let mut diag = vec![shift; n];
        let mut off = vec![T::zero(); n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            let g = x[i + 1] - x[i];
            let rho = T::one() / (nf * g);
            // ∂²U/∂g² = m ρ^m / g
            let c = m * gap_pressure(rho, m) / g;
            diag[i] = diag[i] + c;
            diag[i + 1] = diag[i + 1] + c;
            off[i] = -c;
        }
        Self {
            diag,
            off,
            work: vec![T::zero(); n],
        }
    }

    /// Solves `H d = rhs` in place (Thomas algorithm; `H` is SPD and
    /// diagonally dominant).
    fn solve(&mut self, rhs: &mut [T]) {
        let n = rhs.len();
        let (a, b, c) = (&self.diag, &self.off, &mut self.work);
        c[0] = if n > 1 { b[0] / a[0] } else { T::zero() };
        rhs[0] = rhs[0] / a[0];
        for i in 1..n {
            let denom = a[i] - b[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = b[i] / denom;
            }
            rhs[i] = (rhs[i] - b[i - 1] * rhs[i - 1]) / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] = rhs[i] - c[i] * rhs[i + 1];
        }
    }
}

/// Largest step along `d` keeping gaps above `δ_min` and particles inside
/// the domain, with a safety fraction.
fn max_feasible_step<T: Real>(x: &[T], d: &[T], grid: &Grid<T>) -> T {
    let frac = T::lit(0.9);
    let delta = grid.min_gap();
    let mut amax = T::one();
    for i in 0..x.len().saturating_sub(1) {
        let dd = d[i + 1] - d[i];
        if dd < T::zero() {
            let room = (x[i + 1] - x[i] - delta).max(T::zero());
            amax = amax.min(frac * room / -dd);
        }
    }
    let (first, last) = (0, x.len() - 1);
    if d[first] < T::zero() {
        amax = amax.min(frac * (x[first] - grid.x_min()).max(T::zero()) / -d[first]);
    }
    if d[last] > T::zero() {
        amax = amax.min(frac * (grid.x_max() - x[last]).max(T::zero()) / d[last]);
    }
    amax
}

/// Runs the inner minimization from the warm start `q_prev` and returns the
/// final iterate whether or not it met the tolerance.
pub fn jko_minimize<T: Real>(
    q_prev: &QuantileRep<T>,
    tau: T,
    t: T,
    spec: &EnergySpec<T>,
    cfg: &JkoConfig<T>,
) -> Result<(QuantileRep<T>, InnerStats)> {
    if !(tau > T::zero()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let y = q_prev.positions();
    let n = y.len();
    if n < 2 {
        return Err(Error::param("transport.M", "need at least 2 particles"));
    }
    let obj = Objective { y, tau, t, spec };
    let shift = obj.transport_weight();
    let mut x = y.to_vec();
    let mut g = vec![T::zero(); n];
    let mut j = obj.value_grad(&x, &mut g)?;
    let mut gnorm = sup_norm(&g);
    let initial_grad_norm = gnorm.as_f64();
    let mut pre = match cfg.method {
        InnerMethod::Preconditioned => Some(Preconditioner::build(&x, spec.m, shift)),
        InnerMethod::GradientDescent => None,
    };
    let mut d = vec![T::zero(); n];
    let mut x_trial = vec![T::zero(); n];
    let mut g_trial = vec![T::zero(); n];
    // plain descent keeps its last accepted step length
    let mut gd_scale = T::one() / shift;
    // below this relative change J is dominated by rounding
    let band = T::lit(0.01) * T::epsilon().sqrt();
    let mut iterations = 0;
    while gnorm > cfg.inner_tol && iterations < cfg.inner_max_iter {
        iterations += 1;
        for (di, &gi) in d.iter_mut().zip(&g) {
            *di = -gi;
        }
        match pre.as_mut() {
            Some(p) => p.solve(&mut d),
            None => d.iter_mut().for_each(|di| *di = *di * gd_scale),
        }
        let slope: T = g.iter().zip(&d).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        if !(slope < T::zero()) {
            debug!("inner iteration {iterations}: not a descent direction");
            break;
        }
        let mut alpha = max_feasible_step(&x, &d, &cfg.grid);
        let mut accepted = false;
        let mut shrunk = false;
        while alpha > T::lit(1e-20) {
            for ((xt, &xi), &di) in x_trial.iter_mut().zip(&x).zip(&d) {
                *xt = xi + alpha * di;
            }
            if let Ok(jt) = obj.value_grad(&x_trial, &mut g_trial) {
                // near the optimum the decrease drops below rounding of J;
                // there the sufficient decrease is tested on the slope instead
                let flat = (jt - j).abs() <= band * (T::one() + j.abs());
                let ok = if flat {
                    let slope_t = g_trial.iter().zip(&d).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                    slope_t <= -(T::one() - T::lit(2.0) * cfg.armijo_c) * slope
                } else {
                    jt <= j + cfg.armijo_c * alpha * slope
                };
                if ok {
                    j = jt;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * cfg.armijo_shrink;
            shrunk = true;
        }
        if !accepted {
            debug!("inner iteration {iterations}: line search failed at |g| = {gnorm}");
            if let Some(p) = pre.as_mut() {
                // retry once with a fresh metric before giving up
                *p = Preconditioner::build(&x, spec.m, shift);
                if !shrunk {
                    break;
                }
                continue;
            }
            break;
        }
        std::mem::swap(&mut x, &mut x_trial);
        std::mem::swap(&mut g, &mut g_trial);
        let new_norm = sup_norm(&g);
        match pre.as_mut() {
            Some(p) => {
                if shrunk || new_norm > T::lit(0.5) * gnorm {
                    *p = Preconditioner::build(&x, spec.m, shift);
                }
            }
            None => {
                // next trial length from the secant minimizer along d
                let slope_t = g.iter().zip(&d).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                let curv = slope_t - slope;
                let target = if curv > T::zero() {
                    alpha * (-slope / curv)
                } else {
                    alpha * T::lit(2.0)
                };
                gd_scale = gd_scale * target.max(T::lit(0.25) * alpha).min(T::lit(2.0) * alpha);
            }
        }
        gnorm = new_norm;
    }
    let converged = gnorm <= cfg.inner_tol;
    let stats = InnerStats {
        iterations,
        initial_grad_norm,
        grad_norm: gnorm.as_f64(),
        converged,
    };
    let q = QuantileRep::new(x)?;
    Ok((q, stats))
}

/// One minimizing-movement step. Fails with [`Error::NonConverged`] when the
/// final gradient exceeds `100 · inner_tol`; warns between the tolerances.
pub fn jko_step<T: Real>(
    q_prev: &QuantileRep<T>,
    tau: T,
    t: T,
    spec: &EnergySpec<T>,
    cfg: &JkoConfig<T>,
) -> Result<QuantileRep<T>> {
    jko_step_with_stats(q_prev, tau, t, spec, cfg).map(|(q, _)| q)
}

pub fn jko_step_with_stats<T: Real>(
    q_prev: &QuantileRep<T>,
    tau: T,
    t: T,
    spec: &EnergySpec<T>,
    cfg: &JkoConfig<T>,
) -> Result<(QuantileRep<T>, InnerStats)> {
    let (q, stats) = jko_minimize(q_prev, tau, t, spec, cfg)?;
    if !stats.converged {
        let limit = T::lit(100.0) * cfg.inner_tol;
        if stats.grad_norm > limit.as_f64() {
            return Err(Error::NonConverged {
                grad_norm: stats.grad_norm,
                limit: limit.as_f64(),
                iterations: stats.iterations,
            });
        }
        warn!(
            "inner solve stopped at |g| = {:e} above tolerance {} after {} iterations",
            stats.grad_norm, cfg.inner_tol, stats.iterations
        );
    }
    Ok((q, stats))
}

/// The Wasserstein instance of the abstract scheme: `E = U_m`,
/// `P_t = 𝒲_{ωt}`.
pub struct WassersteinProblem<'a, T> {
    pub spec: &'a EnergySpec<T>,
    pub cfg: &'a JkoConfig<T>,
    stats: Mutex<Vec<InnerStats>>,
}

impl<'a, T: Real> WassersteinProblem<'a, T> {
    pub fn new(spec: &'a EnergySpec<T>, cfg: &'a JkoConfig<T>) -> Self {
        Self {
            spec,
            cfg,
            stats: Mutex::new(Vec::new()),
        }
    }

    /// Inner statistics of every solve so far, in call order.
    pub fn take_stats(&self) -> Vec<InnerStats> {
        std::mem::take(&mut *self.stats.lock().unwrap_or_else(|e| e.into_inner()))
    }

    /// Constants `(c_*, τ_*)` with `E + P_t ≥ c_*` on configurations inside
    /// the grid, and any `τ_*`: the entropy is bounded below by equal gaps
    /// filling the domain, `U_m ≥ 0` for `m > 1`, and the interaction by
    /// half the sampled minimum of `W` (the diagonal `x = y` is sampled).
    pub fn coercivity_constant(&self, t_end: T) -> T {
        let n = T::of_usize(self.cfg.n_particles);
        let len = self.cfg.grid.length();
        let internal = if self.spec.m == T::one() {
            let gaps = n - T::one();
            -(gaps / n) * (n * len / gaps).ln()
        } else {
            T::zero()
        };
        let w = self.spec.potential.as_ref();
        if w.is_zero() {
            return internal;
        }
        let k = 64;
        let (lo, step) = (self.cfg.grid.x_min(), len / T::of_usize(k));
        let mut wmin = T::infinity();
        for s in 0..=32 {
            let t = self.spec.potential_time(t_end * T::of_usize(s) / T::lit(32.0));
            for i in 0..=k {
                let x = lo + step * T::of_usize(i);
                for jj in 0..=k {
                    wmin = wmin.min(w.eval(t, x, lo + step * T::of_usize(jj)));
                }
            }
        }
        internal + T::lit(0.5) * wmin.min(T::zero())
    }
}

impl<T: Real> MetricSpace<T> for WassersteinProblem<'_, T> {
    type Point = QuantileRep<T>;

    fn distance(&self, u: &QuantileRep<T>, v: &QuantileRep<T>) -> T {
        w2_sq_unchecked(u.positions(), v.positions()).sqrt()
    }
}

impl<T: Real> PerturbedEnergy<T, QuantileRep<T>> for WassersteinProblem<'_, T> {
    fn energy(&self, u: &QuantileRep<T>) -> Result<T> {
        self.spec.internal(u.positions())
    }

    fn perturbation(&self, t: T, u: &QuantileRep<T>) -> Result<T> {
        Ok(self.spec.interaction(u.positions(), t))
    }

    fn perturbation_rate(&self, t: T, u: &QuantileRep<T>) -> Result<T> {
        Ok(self.spec.interaction_time_derivative(u.positions(), t))
    }
}

impl<T: Real> MinimizerOracle<T, QuantileRep<T>> for WassersteinProblem<'_, T> {
    fn solve(&self, tau: T, t: T, u: &QuantileRep<T>) -> Result<QuantileRep<T>> {
        let (q, stats) = jko_step_with_stats(u, tau, t, self.spec, self.cfg)?;
        self.stats.lock().unwrap_or_else(|e| e.into_inner()).push(stats);
        Ok(q)
    }
}

/// Piecewise-constant-in-time solution with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub grid: Grid<T>,
    pub run: SchemeRun<T, QuantileRep<T>>,
    /// Deposited densities for `k = 0..=N`.
    pub densities: Vec<Density<T>>,
    /// Inner statistics per step.
    pub inner: Vec<InnerStats>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.run.states().map(|(t, _)| t).collect()
    }

    pub fn states(&self) -> Vec<&QuantileRep<T>> {
        self.run.states().map(|(_, q)| q).collect()
    }

    /// `(t_k, X_k, ρ_k)`.
    pub fn snapshot(&self, k: usize) -> (T, &QuantileRep<T>, &Density<T>) {
        if k == 0 {
            (T::zero(), &self.run.initial, &self.densities[0])
        } else {
            let r = &self.run.records[k - 1];
            (r.t, &r.u, &self.densities[k])
        }
    }

    pub fn records(&self) -> &[StepRecord<T, QuantileRep<T>>] {
        &self.run.records
    }

    pub fn final_state(&self) -> &QuantileRep<T> {
        self.run.final_state()
    }

    pub fn final_density(&self) -> &Density<T> {
        self.densities.last().expect("trajectory holds the initial state")
    }
}

/// Runs the scheme from a grid density.
pub fn run_jko<T: Real>(rho0: &Density<T>, spec: &EnergySpec<T>, cfg: &JkoConfig<T>) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let q0 = density_to_quantiles(rho0, cfg.n_particles)?;
    run_jko_from_quantiles(q0, spec, cfg)
}

/// Runs the scheme from a particle configuration.
pub fn run_jko_from_quantiles<T: Real>(
    q0: QuantileRep<T>,
    spec: &EnergySpec<T>,
    cfg: &JkoConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if q0.len() != cfg.n_particles {
        return Err(Error::MismatchedParticles {
            left: q0.len(),
            right: cfg.n_particles,
        });
    }
    if !q0.within(&cfg.grid) {
        return Err(Error::param("rho0", "initial particles leave the domain"));
    }
    let problem = WassersteinProblem::new(spec, cfg);
    let run = run_scheme(&problem, &problem, &problem, q0, &cfg.schedule, cfg.t_end, cfg.tau_cap)?;
    let densities = run.states().map(|(_, q)| quantiles_to_density(q, &cfg.grid)).collect();
    Ok(Trajectory {
        grid: cfg.grid,
        run,
        densities,
        inner: problem.take_stats(),
    })
}

/// Smooth test function with its first two derivatives.
/// Trajectory from stored particle states; `steps` holds `(τ_k, X_k)` for
/// `k = 1..=N`. Inner statistics are not available and left empty.
pub fn trajectory_from_states<T: Real>(
    q0: QuantileRep<T>,
    steps: Vec<(T, QuantileRep<T>)>,
    spec: &EnergySpec<T>,
    cfg: &JkoConfig<T>,
) -> Result<Trajectory<T>> {
    if let Some(bad) = std::iter::once(&q0)
        .chain(steps.iter().map(|(_, q)| q))
        .find(|q| q.len() != q0.len())
    {
        return Err(Error::MismatchedParticles {
            left: q0.len(),
            right: bad.len(),
        });
    }
    let problem = WassersteinProblem::new(spec, cfg);
    let run = replay_scheme(&problem, &problem, q0, steps)?;
    let densities = run.states().map(|(_, q)| quantiles_to_density(q, &cfg.grid)).collect();
    Ok(Trajectory {
        grid: cfg.grid,
        run,
        densities,
        inner: Vec::new(),
    })
}

pub trait TestFunction<T> {
    fn value(&self, x: T) -> T;
    fn d1(&self, x: T) -> T;
    fn d2(&self, x: T) -> T;
    /// `sup |ψ′|`.
    fn d1_sup(&self) -> T;
}

/// `ψ(x) = exp(−x²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianBump;

impl<T: Real> TestFunction<T> for GaussianBump {
    fn value(&self, x: T) -> T {
        (-x * x).exp()
    }
    fn d1(&self, x: T) -> T {
        -T::lit(2.0) * x * (-x * x).exp()
    }
    fn d2(&self, x: T) -> T {
        (T::lit(4.0) * x * x - T::lit(2.0)) * (-x * x).exp()
    }
    fn d1_sup(&self) -> T {
        T::lit(2.0).sqrt() * T::lit(-0.5).exp()
    }
}

/// Residual of the discrete Euler–Lagrange equation tested against `ψ`,
/// with `(X_i, Y_i)` paired monotonically:
///
/// `(1/M²) Σ_i Σ_j ∇_x W(X_i, X_j) ψ′(X_i) − ∫ ψ″ ρ^m dx
///     = −(1/τ)(1/M) Σ_i (X_i − Y_i) ψ′(X_i)`.
///
/// `∫ψ″ρ^m` is exact for the gap-wise constant density:
/// `Σ_i ρ_i^m (ψ′(X_{i+1}) − ψ′(X_i))`.
pub fn euler_lagrange_residual<T: Real>(
    q_next: &QuantileRep<T>,
    q_prev: &QuantileRep<T>,
    tau: T,
    t: T,
    spec: &EnergySpec<T>,
    psi: &dyn TestFunction<T>,
) -> Result<T> {
    let x = q_next.positions();
    let y = q_prev.positions();
    if x.len() != y.len() {
        return Err(Error::MismatchedParticles {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    let nf = T::of_usize(n);
    let dpsi: Vec<T> = x.iter().map(|&xi| psi.d1(xi)).collect();
    let mut interaction = T::zero();
    if !spec.potential.is_zero() {
        let s = spec.potential_time(t);
        let w = spec.potential.as_ref();
        for (i, &xi) in x.iter().enumerate() {
            let row = x.iter().fold(T::zero(), |acc, &xj| acc + w.grad_x(s, xi, xj));
            interaction = interaction + row * dpsi[i];
        }
        interaction = interaction / (nf * nf);
    }
    let mut diffusion = T::zero();
    for i in 0..n - 1 {
        let rho = T::one() / (nf * (x[i + 1] - x[i]));
        diffusion = diffusion + gap_pressure(rho, spec.m) * (dpsi[i + 1] - dpsi[i]);
    }
    let lhs = interaction - diffusion;
    let rhs = -x
        .iter()
        .zip(y)
        .zip(&dpsi)
        .fold(T::zero(), |acc, ((&xi, &yi), &p)| acc + (xi - yi) * p)
        / (tau * nf);
    Ok((lhs - rhs).abs())
}

/// Monitors of the a priori estimates specific to the Fokker–Planck flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FpDiagnostics<T> {
    /// `max_k ∫x² dρ_k`
    pub max_second_moment: T,
    /// `∫x² dρ_k` for `k = 0..=N`.
    pub second_moments: Vec<T>,
    /// `max_k |ℋ(ρ_k)|`
    pub max_abs_entropy: T,
    /// `max_k |F(ρ_k)|`
    pub max_energy: T,
    pub scheme: DiagnosticsReport<T>,
}

pub fn classical_estimates_fp<T: Real>(traj: &Trajectory<T>, spec: &EnergySpec<T>) -> Result<FpDiagnostics<T>> {
    let mut second_moments = Vec::with_capacity(traj.len());
    let mut max_abs_entropy = T::zero();
    let mut max_energy = T::zero();
    for (t, q) in traj.run.states() {
        second_moments.push(q.moments().second_moment);
        max_abs_entropy = max_abs_entropy.max(internal_energy_of(q.positions(), T::one())?.abs());
        max_energy = max_energy.max(spec.total(q.positions(), t)?.abs());
    }
    let max_second_moment = second_moments.iter().copied().fold(T::zero(), T::max);
    let star = traj.run.initial.clone();
    let space = SecondMomentSpace;
    let scheme = classical_estimates(&space, &traj.run, &star, &Ceilings::default(), None);
    Ok(FpDiagnostics {
        max_second_moment,
        second_moments,
        max_abs_entropy,
        max_energy,
        scheme,
    })
}

/// `W₂` on particle configurations without a problem attached.
struct SecondMomentSpace;

impl<T: Real> MetricSpace<T> for SecondMomentSpace {
    type Point = QuantileRep<T>;
    fn distance(&self, u: &QuantileRep<T>, v: &QuantileRep<T>) -> T {
        w2_sq_unchecked(u.positions(), v.positions()).sqrt()
    }
}

/// `Σ_k τ_k (‖∂_x ρ_k^{m/2}‖² + (m − 1) U_m(ρ_k))` over `k = 1..=N`.
pub fn h1_monitor<T: Real>(traj: &Trajectory<T>, spec: &EnergySpec<T>) -> Result<T> {
    let mut acc = T::zero();
    for (k, r) in traj.records().iter().enumerate() {
        let rho = &traj.densities[k + 1];
        let mut term = h1_seminorm(rho, spec.m);
        if spec.m > T::one() {
            term = term + (spec.m - T::one()) * internal_energy_of(r.u.positions(), spec.m)?;
        }
        acc = acc + r.tau * term;
    }
    Ok(acc)
}

/// Empirical ½-Hölder constant of the trajectory.
pub fn trajectory_holder_modulus<T: Real>(traj: &Trajectory<T>) -> Result<T> {
    let times = traj.times();
    let states: Vec<QuantileRep<T>> = traj.states().into_iter().cloned().collect();
    holder_modulus(&times, &states)
}

/// `max_k W₂(ρ_k, ρ'_k)` for two trajectories on the same time grid.
pub fn max_w2_between<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::param(
            "trajectories",
            format!("{} vs {} snapshots", a.len(), b.len()),
        ));
    }
    let mut best = T::zero();
    for ((_, qa), (_, qb)) in a.run.states().zip(b.run.states()) {
        best = best.max(w2_positions(qa.positions(), qb.positions())?);
    }
    Ok(best)
}

/// Midpoint second moment of a snapshot density (grid view).
pub fn density_second_moment<T: Real>(rho: &Density<T>) -> T {
    moments(rho).second_moment
}
