//! Explicit finite-volume solver for
//! `∂_t ρ = ∂_xx ρ^m + ∂_x(ρ ∂_x(W_{ωt} ∗ ρ))` on cell averages.
//!
//! Fluxes live on cell faces: central differences of `ρ^m` for diffusion and
//! first-order upwinding for the drift. Boundary faces carry no flux, so the
//! scheme is conservative, and the step restriction keeps it positive.

use crate::density::{density_to_quantiles, Density, Grid};
use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::jko::Trajectory;
use crate::scalar::Real;
use crate::transport::w2_distance;

pub const DEFAULT_CFL_SAFETY: f64 = 0.4;

/// Evolves `rho0` to time `t_end`.
pub fn fv_run<T: Real>(rho0: &Density<T>, spec: &EnergySpec<T>, t_end: T, cfl_safety: T) -> Result<Density<T>> {
    let mut out = fv_run_snapshots(rho0, spec, &[t_end], cfl_safety)?;
    Ok(out.pop().expect("one snapshot requested"))
}

/// States at each of the nondecreasing `times`; steps are shortened to land
/// on them exactly.
pub fn fv_run_snapshots<T: Real>(
    rho0: &Density<T>,
    spec: &EnergySpec<T>,
    times: &[T],
    cfl_safety: T,
) -> Result<Vec<Density<T>>> {
    if !(cfl_safety > T::zero() && cfl_safety <= T::one()) {
        return Err(Error::param(
            "cfl_safety",
            format!("must lie in (0, 1], got {cfl_safety}"),
        ));
    }
    if times.iter().any(|t| !(*t >= T::zero())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be nonnegative and nondecreasing"));
    }
    let mut solver = FvSolver::new(rho0, spec, cfl_safety);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        solver.advance_to(target)?;
        out.push(solver.density()?);
    }
    Ok(out)
}

struct FvSolver<'a, T> {
    grid: Grid<T>,
    spec: &'a EnergySpec<T>,
    safety: T,
    rho: Vec<T>,
    t: T,
    /// `∂_x K(x_j, x_l)` on the grid when the potential factorizes.
    kernel_grad: Option<Vec<T>>,
    vel: Vec<T>,
    flux: Vec<T>,
}

impl<'a, T: Real> FvSolver<'a, T> {
    fn new(rho0: &Density<T>, spec: &'a EnergySpec<T>, safety: T) -> Self {
        let grid = *rho0.grid();
        let n = grid.n_cells();
        let xs = grid.centers();
        let w = spec.potential.as_ref();
        let kernel_grad = if w.is_zero() {
            None
        } else {
            w.factorized(T::zero()).map(|(_, k)| {
                let mut mat = Vec::with_capacity(n * n);
                for &xj in &xs {
                    mat.extend(xs.iter().map(|&xl| k.grad_x(xj, xl)));
                }
                mat
            })
        };
        Self {
            grid,
            spec,
            safety,
            rho: rho0.values().to_vec(),
            t: T::zero(),
            kernel_grad,
            vel: vec![T::zero(); n],
            flux: vec![T::zero(); n + 1],
        }
    }

    fn density(&self) -> Result<Density<T>> {
        Density::new(self.grid, self.rho.clone())
    }

    /// Cell-center velocity `v_j = −Σ_l h ∂_x W_{ωt}(x_j, x_l) ρ_l`.
    fn update_velocity(&mut self) {
        let n = self.rho.len();
        let h = self.grid.h();
        let w = self.spec.potential.as_ref();
        if w.is_zero() {
            self.vel.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        let s = self.spec.potential_time(self.t);
        match (&self.kernel_grad, w.factorized(s)) {
            (Some(mat), Some((a, _))) => {
                for j in 0..n {
                    let row = &mat[j * n..(j + 1) * n];
                    let acc = row.iter().zip(&self.rho).fold(T::zero(), |acc, (&k, &r)| acc + k * r);
                    self.vel[j] = -a * h * acc;
                }
            }
            _ => {
                for j in 0..n {
                    let xj = self.grid.center(j);
                    let mut acc = T::zero();
                    for (l, &r) in self.rho.iter().enumerate() {
                        acc = acc + w.grad_x(s, xj, self.grid.center(l)) * r;
                    }
                    self.vel[j] = -h * acc;
                }
            }
        }
    }

    fn stable_dt(&self) -> T {
        let h = self.grid.h();
        let m = self.spec.m;
        let dmax = self.rho.iter().fold(T::zero(), |acc, &r| {
            let d = if m == T::one() {
                T::one()
            } else {
                m * r.powf(m - T::one())
            };
            acc.max(d)
        });
        let vmax = self.vel.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        let mut dt = T::infinity();
        if dmax > T::zero() {
            dt = dt.min(h * h / (T::lit(2.0) * dmax));
        }
        if vmax > T::zero() {
            dt = dt.min(h / vmax);
        }
        self.safety * dt
    }

    fn advance_to(&mut self, target: T) -> Result<()> {
        let n = self.rho.len();
        let h = self.grid.h();
        let m = self.spec.m;
        let floor = T::epsilon() * target.max(T::one());
        while target - self.t > floor {
            self.update_velocity();
            let dt_cfl = self.stable_dt();
            if !(dt_cfl.is_finite() && dt_cfl > floor) {
                if dt_cfl.is_infinite() {
                    // nothing moves: constant state
                    self.t = target;
                    break;
                }
                return Err(Error::CflDegenerate {
                    t: self.t.as_f64(),
                    dt: dt_cfl.as_f64(),
                });
            }
            let dt = dt_cfl.min(target - self.t);
            let pm = |r: T| if m == T::one() { r } else { r.powf(m) };
            for j in 0..n - 1 {
                let (l, r) = (self.rho[j], self.rho[j + 1]);
                let diffusive = -(pm(r) - pm(l)) / h;
                let v = T::lit(0.5) * (self.vel[j] + self.vel[j + 1]);
                let advective = if v > T::zero() { v * l } else { v * r };
                self.flux[j + 1] = diffusive + advective;
            }
            self.flux[0] = T::zero();
            self.flux[n] = T::zero();
            let ratio = dt / h;
            for j in 0..n {
                let next = self.rho[j] - ratio * (self.flux[j + 1] - self.flux[j]);
                if !next.is_finite() {
                    return Err(Error::CflDegenerate {
                        t: self.t.as_f64(),
                        dt: dt.as_f64(),
                    });
                }
                // the step bound keeps values nonnegative up to rounding
                self.rho[j] = next.max(T::zero());
            }
            self.t = self.t + dt;
        }
        self.t = self.t.max(target);
        Ok(())
    }
}

/// Agreement between a minimizing-movement trajectory and the
/// finite-volume solution at the trajectory's times.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation<T> {
    pub times: Vec<T>,
    pub w2: Vec<T>,
    pub max_w2: T,
    pub tolerance: T,
    pub pass: bool,
}

/// Runs the finite-volume solver from the trajectory's initial density on
/// its grid and compares quantiles snapshot by snapshot.
pub fn cross_validate<T: Real>(traj: &Trajectory<T>, spec: &EnergySpec<T>, tol_w2: T) -> Result<CrossValidation<T>> {
    let times = traj.times();
    let fv = fv_run_snapshots(&traj.densities[0], spec, &times, T::lit(DEFAULT_CFL_SAFETY))?;
    let n_particles = traj.final_state().len();
    let w2 = traj
        .states()
        .iter()
        .zip(&fv)
        .map(|(q, rho)| w2_distance(q, &density_to_quantiles(rho, n_particles)?))
        .collect::<Result<Vec<T>>>()?;
    let max_w2 = w2.iter().copied().fold(T::zero(), T::max);
    Ok(CrossValidation {
        times,
        w2,
        max_w2,
        tolerance: tol_w2,
        pass: max_w2 <= tol_w2,
    })
}
