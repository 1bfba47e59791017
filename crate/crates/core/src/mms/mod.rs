//! Time-dependent minimizing movements on an abstract metric space.
//!
//! Each step solves `u_k ∈ argmin_v  d²(u_{k−1}, v)/(2τ_k) + E(v) + P_{t_k}(v)`
//! with `t_k = τ_1 + … + τ_k`. The diagnostics evaluate the discrete
//! estimates every such sequence satisfies when the minimizations are exact.

mod euclid;

use log::{info, warn};

use crate::error::{Error, Result};
use crate::quadrature::Rule;
use crate::scalar::Real;

pub use euclid::EuclideanDemo;

/// Default upper bound on admissible step sizes.
pub const DEFAULT_TAU_CAP: f64 = 0.1;

/// Distance on the state space.
pub trait MetricSpace<T: Real> {
    type Point: Clone;
    fn distance(&self, u: &Self::Point, v: &Self::Point) -> T;
}

/// `E(u) + P_t(u)`, split into its autonomous and time-dependent parts.
pub trait PerturbedEnergy<T: Real, P> {
    fn energy(&self, u: &P) -> Result<T>;
    fn perturbation(&self, t: T, u: &P) -> Result<T>;
    /// `∂_t P_t(u)`.
    fn perturbation_rate(&self, t: T, u: &P) -> Result<T>;
    /// Time average of `P` over one period, when available.
    fn mean_perturbation(&self, _u: &P) -> Option<Result<T>> {
        None
    }
}

/// Returns a minimizer of `Φ(τ, t, u; ·) = d²(u, ·)/(2τ) + E + P_t`.
pub trait MinimizerOracle<T: Real, P> {
    fn solve(&self, tau: T, t: T, u: &P) -> Result<P>;
}

/// Step-size partition.
#[derive(Debug, Clone, PartialEq)]
pub enum TauSchedule<T> {
    Uniform(T),
    /// `τ_k = tau0 · ratio^(k−1)`.
    Geometric {
        tau0: T,
        ratio: T,
    },
    Custom(Vec<T>),
}

impl<T: Real> TauSchedule<T> {
    /// Step sizes covering `[0, t_end]`, each in `(0, cap]`.
    pub fn steps(&self, t_end: T, cap: T) -> Result<Vec<T>> {
        if !(t_end > T::zero() && t_end.is_finite()) {
            return Err(Error::param("T", format!("horizon must be positive, got {t_end}")));
        }
        let check = |tau: T| {
            if tau > T::zero() && tau <= cap {
                Ok(tau)
            } else {
                Err(Error::param("tau", format!("step {tau} outside (0, {cap}]")))
            }
        };
        let mut out = Vec::new();
        match self {
            TauSchedule::Uniform(tau) => {
                let tau = check(*tau)?;
                let ratio = t_end / tau;
                let n = if (ratio - ratio.round()).abs() <= T::lit(1e-9) * ratio {
                    ratio.round()
                } else {
                    ratio.ceil()
                };
                let n = n.to_usize().ok_or_else(|| Error::param("tau", "too many steps"))?;
                out.resize(n.max(1), tau);
            }
            TauSchedule::Geometric { tau0, ratio } => {
                if !(*ratio > T::zero()) {
                    return Err(Error::param("ratio", "must be positive"));
                }
                let mut tau = *tau0;
                let mut sum = T::zero();
                while !covers(sum, t_end) {
                    let step = check(tau)?;
                    out.push(step);
                    sum = sum + step;
                    tau = tau * *ratio;
                    if out.len() > 100_000_000 {
                        return Err(Error::param("tau", "schedule does not reach the horizon"));
                    }
                }
            }
            TauSchedule::Custom(taus) => {
                let mut sum = T::zero();
                for &tau in taus {
                    if covers(sum, t_end) {
                        break;
                    }
                    out.push(check(tau)?);
                    sum = sum + tau;
                }
                if !covers(sum, t_end) {
                    return Err(Error::param("tau", format!("steps sum to {sum} < T = {t_end}")));
                }
            }
        }
        Ok(out)
    }
}

fn covers<T: Real>(sum: T, t_end: T) -> bool {
    sum >= t_end * (T::one() - T::lit(1e-12))
}

/// Diagnostics of one step `u_{k−1} → u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T, P> {
    pub k: usize,
    pub t: T,
    pub tau: T,
    pub u: P,
    /// `d²(u_{k−1}, u_k)`
    pub d2_prev: T,
    /// `E(u_k)`
    pub energy: T,
    /// `P_{t_k}(u_k)`
    pub perturbation: T,
    /// `d(u_{k−1}, u_k)/τ_k`, an upper bound for the local slope at `u_k`.
    pub slope_bound: T,
    /// `E(u_{k−1}) + P_{t_k}(u_{k−1})`, the value of staying put.
    pub stay_put: T,
}

impl<T: Real, P> StepRecord<T, P> {
    /// `Φ(τ_k, t_k, u_{k−1}; u_k)`.
    pub fn objective(&self) -> T {
        self.d2_prev / (T::lit(2.0) * self.tau) + self.energy + self.perturbation
    }
}

/// Output of [`run_scheme`].
#[derive(Debug, Clone)]
pub struct SchemeRun<T, P> {
    pub initial: P,
    /// `E(u_0)`
    pub initial_energy: T,
    /// `P_0(u_0)`
    pub initial_perturbation: T,
    pub records: Vec<StepRecord<T, P>>,
}

impl<T: Real, P: Clone> SchemeRun<T, P> {
    pub fn final_state(&self) -> &P {
        self.records.last().map_or(&self.initial, |r| &r.u)
    }

    /// `(t_k, u_k)` for `k = 0..=N`.
    pub fn states(&self) -> impl Iterator<Item = (T, &P)> {
        std::iter::once((T::zero(), &self.initial)).chain(self.records.iter().map(|r| (r.t, &r.u)))
    }
}

/// Runs the scheme from `u0` until the accumulated time reaches `t_end`.
pub fn run_scheme<T, S, E, O>(
    space: &S,
    energy: &E,
    oracle: &O,
    u0: S::Point,
    schedule: &TauSchedule<T>,
    t_end: T,
    tau_cap: T,
) -> Result<SchemeRun<T, S::Point>>
where
    T: Real,
    S: MetricSpace<T>,
    E: PerturbedEnergy<T, S::Point>,
    O: MinimizerOracle<T, S::Point>,
{
    let taus = schedule.steps(t_end, tau_cap)?;
    let initial_energy = energy.energy(&u0)?;
    let initial_perturbation = energy.perturbation(T::zero(), &u0)?;
    let mut records: Vec<StepRecord<T, S::Point>> = Vec::with_capacity(taus.len());
    let mut t = T::zero();
    let mut e_prev = initial_energy;
    for (idx, &tau) in taus.iter().enumerate() {
        let k = idx + 1;
        let wrap = |source: Error| Error::StepFailed {
            step: k,
            source: Box::new(source),
        };
        t = t + tau;
        let u_prev = records.last().map_or(&u0, |r| &r.u);
        let stay_put = e_prev + energy.perturbation(t, u_prev).map_err(wrap)?;
        let u = oracle.solve(tau, t, u_prev).map_err(wrap)?;
        let d = space.distance(u_prev, &u);
        let e = energy.energy(&u).map_err(wrap)?;
        let p = energy.perturbation(t, &u).map_err(wrap)?;
        let record = StepRecord {
            k,
            t,
            tau,
            u,
            d2_prev: d * d,
            energy: e,
            perturbation: p,
            slope_bound: d / tau,
            stay_put,
        };
        let excess = record.objective() - stay_put;
        if excess > T::lit(1e-10) * (T::one() + stay_put.abs()) {
            warn!("step {k}: minimizer worse than the previous state by {excess}");
        }
        e_prev = e;
        records.push(record);
    }
    Ok(SchemeRun {
        initial: u0,
        initial_energy,
        initial_perturbation,
        records,
    })
}

/// Rebuilds the step records of a stored run from its states; `steps`
/// holds `(τ_k, u_k)` for `k = 1..=N`.
pub fn replay_scheme<T, S, E>(
    space: &S,
    energy: &E,
    u0: S::Point,
    steps: Vec<(T, S::Point)>,
) -> Result<SchemeRun<T, S::Point>>
where
    T: Real,
    S: MetricSpace<T>,
    E: PerturbedEnergy<T, S::Point>,
{
    let initial_energy = energy.energy(&u0)?;
    let initial_perturbation = energy.perturbation(T::zero(), &u0)?;
    let mut records: Vec<StepRecord<T, S::Point>> = Vec::with_capacity(steps.len());
    let mut t = T::zero();
    let mut e_prev = initial_energy;
    for (idx, (tau, u)) in steps.into_iter().enumerate() {
        if !(tau > T::zero()) {
            return Err(Error::param("tau", format!("step {} has τ = {tau}", idx + 1)));
        }
        t = t + tau;
        let u_prev = records.last().map_or(&u0, |r| &r.u);
        let stay_put = e_prev + energy.perturbation(t, u_prev)?;
        let d = space.distance(u_prev, &u);
        let e = energy.energy(&u)?;
        let p = energy.perturbation(t, &u)?;
        e_prev = e;
        records.push(StepRecord {
            k: idx + 1,
            t,
            tau,
            u,
            d2_prev: d * d,
            energy: e,
            perturbation: p,
            slope_bound: d / tau,
            stay_put,
        });
    }
    Ok(SchemeRun {
        initial: u0,
        initial_energy,
        initial_perturbation,
        records,
    })
}

/// `ũ(t_prev + σ) ∈ J_{σ, t_prev + σ}(u_prev)`.
pub fn de_giorgi_interpolant<T: Real, P, O: MinimizerOracle<T, P>>(
    oracle: &O,
    u_prev: &P,
    t_prev: T,
    sigma: T,
) -> Result<P> {
    if !(sigma > T::zero()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    oracle.solve(sigma, t_prev + sigma, u_prev)
}

/// Ceilings above which a monitor is flagged as unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ceilings<T> {
    pub dissipation: T,
    pub energy: T,
    pub distance_sq: T,
}

impl<T: Real> Default for Ceilings<T> {
    fn default() -> Self {
        Self {
            dissipation: T::lit(1e6),
            energy: T::lit(1e6),
            distance_sq: T::lit(1e6),
        }
    }
}

/// Monitors of the a priori estimates along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport<T> {
    /// `D_N = Σ_k d²(u_{k−1}, u_k)/(2τ_k)`
    pub dissipation_sum: T,
    /// `max_k |E(u_k)|`, `k = 0..=N`
    pub max_energy: T,
    /// `max_k d²(u_*, u_k)`, `k = 0..=N`
    pub max_distance_sq: T,
    /// `Σ_k (E(u_{k−1}) + P_{t_k}(u_{k−1}) − E(u_k) − P_{t_k}(u_k)) − D_N`,
    /// nonnegative for exact minimizers.
    pub assembled_margin: T,
    /// Steps whose minimizer is worse than staying put.
    pub descent_violations: Vec<usize>,
    /// `sup_k 4 α_k < 1` when an α estimate was supplied.
    pub smallness: Option<bool>,
    /// Names of monitors above their ceiling.
    pub unbounded: Vec<&'static str>,
}

/// Per-step integral of the perturbation's time modulus.
pub type StepModulus<'a, T, P> = &'a dyn Fn(&StepRecord<T, P>) -> T;

/// Evaluates the classical a priori estimates. `alpha` maps a step to the
/// integral of the perturbation's time modulus over that step.
pub fn classical_estimates<T, S>(
    space: &S,
    run: &SchemeRun<T, S::Point>,
    u_star: &S::Point,
    ceilings: &Ceilings<T>,
    alpha: Option<StepModulus<'_, T, S::Point>>,
) -> DiagnosticsReport<T>
where
    T: Real,
    S: MetricSpace<T>,
{
    let mut dissipation_sum = T::zero();
    let mut max_energy = run.initial_energy.abs();
    let d0 = space.distance(u_star, &run.initial);
    let mut max_distance_sq = d0 * d0;
    let mut decrease = T::zero();
    let mut descent_violations = Vec::new();
    for r in &run.records {
        dissipation_sum = dissipation_sum + r.d2_prev / (T::lit(2.0) * r.tau);
        max_energy = max_energy.max(r.energy.abs());
        let d = space.distance(u_star, &r.u);
        max_distance_sq = max_distance_sq.max(d * d);
        decrease = decrease + (r.stay_put - r.energy - r.perturbation);
        if r.objective() - r.stay_put > T::lit(1e-10) * (T::one() + r.stay_put.abs()) {
            descent_violations.push(r.k);
        }
    }
    let smallness = match alpha {
        Some(a) => Some(run.records.iter().all(|r| T::lit(4.0) * a(r) < T::one())),
        None => {
            info!("no alpha estimate supplied; step-size smallness condition not checked");
            None
        }
    };
    let mut unbounded = Vec::new();
    if !(dissipation_sum <= ceilings.dissipation) {
        unbounded.push("dissipation");
    }
    if !(max_energy <= ceilings.energy) {
        unbounded.push("energy");
    }
    if !(max_distance_sq <= ceilings.distance_sq) {
        unbounded.push("distance");
    }
    DiagnosticsReport {
        dissipation_sum,
        max_energy,
        max_distance_sq,
        assembled_margin: decrease - dissipation_sum,
        descent_violations,
        smallness,
        unbounded,
    }
}

/// Per-step balance of the discrete energy inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInequality<T> {
    pub k: usize,
    pub lhs: T,
    pub rhs: T,
    /// `max(0, lhs − rhs)`
    pub violation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyInequalityReport<T> {
    pub steps: Vec<StepInequality<T>>,
    pub max_violation: T,
    /// `1e−6 · |E(u_0) + P_0(u_0)|`
    pub tolerance: T,
    /// Set when some violation exceeds the tolerance. With the slope
    /// replaced by its upper surrogate this is a warning, not a failure.
    pub warn: bool,
}

/// Checks, for every step,
///
/// `F_{t_k}(u_k) + d²/(2τ) + ½∫₀^τ (d(u_{k−1}, ũ_σ)/σ)² dσ
///     ≤ F_{t_{k−1}}(u_{k−1}) + ∫₀^τ ∂_t P_{t_{k−1}+σ}(ũ_σ) dσ`
///
/// with `ũ_σ` the De Giorgi interpolant and both integrals evaluated by
/// `n_sub`-point Gauss–Legendre quadrature.
pub fn energy_inequality_check<T, S, E, O>(
    space: &S,
    energy: &E,
    oracle: &O,
    run: &SchemeRun<T, S::Point>,
    n_sub: usize,
) -> Result<EnergyInequalityReport<T>>
where
    T: Real,
    S: MetricSpace<T>,
    E: PerturbedEnergy<T, S::Point>,
    O: MinimizerOracle<T, S::Point>,
{
    if n_sub < 2 {
        return Err(Error::param("n_sub", format!("need at least 2 sub-nodes, got {n_sub}")));
    }
    let half = T::lit(0.5);
    let mut steps = Vec::with_capacity(run.records.len());
    let mut u_prev = &run.initial;
    let mut f_prev = run.initial_energy + run.initial_perturbation;
    let mut t_prev = T::zero();
    let mut max_violation = T::zero();
    for r in &run.records {
        let rule = Rule::gauss_legendre(n_sub, T::zero(), r.tau);
        let mut slope_int = T::zero();
        let mut rate_int = T::zero();
        for (&sigma, &w) in rule.nodes.iter().zip(&rule.weights) {
            let u_sigma = de_giorgi_interpolant(oracle, u_prev, t_prev, sigma)?;
            let s = space.distance(u_prev, &u_sigma) / sigma;
            slope_int = slope_int + w * s * s;
            rate_int = rate_int + w * energy.perturbation_rate(t_prev + sigma, &u_sigma)?;
        }
        let f_k = r.energy + r.perturbation;
        let lhs = f_k + r.d2_prev / (T::lit(2.0) * r.tau) + half * slope_int;
        let rhs = f_prev + rate_int;
        let violation = (lhs - rhs).max(T::zero());
        max_violation = max_violation.max(violation);
        steps.push(StepInequality {
            k: r.k,
            lhs,
            rhs,
            violation,
        });
        u_prev = &r.u;
        f_prev = f_k;
        t_prev = r.t;
    }
    let tolerance = T::lit(1e-6) * (run.initial_energy + run.initial_perturbation).abs();
    let warn_flag = max_violation > tolerance;
    if warn_flag {
        warn!("discrete energy inequality exceeded by {max_violation} (tolerance {tolerance})");
    }
    Ok(EnergyInequalityReport {
        steps,
        max_violation,
        tolerance,
        warn: warn_flag,
    })
}

/// Constants of the coercivity bound `E(v) + P_t(v) + d²(u_*, v)/(2τ_*) ≥ c_*`.
#[derive(Debug, Clone)]
pub struct CoercivityBound<T, P> {
    pub c_star: T,
    pub tau_star: T,
    pub u_star: P,
}

/// Results of the Moreau–Yosida checks at one `(u, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoreauYosidaReport<T> {
    /// `(τ, φ(τ, t, u))` in the order of the supplied list.
    pub phi: Vec<(T, T)>,
    /// `E(u) + P_t(u)`
    pub value: T,
    /// `max_{σ ≥ τ} max(0, φ(σ) − φ(τ))`
    pub monotonicity_violation: T,
    /// `max_τ max(0, φ(τ) − E(u) − P_t(u))`
    pub upper_violation: T,
    /// Largest increase of `E + P − φ` as τ decreases.
    pub trend_violation: T,
    /// Lower bound `φ ≥ c_* − d²(u_*, u)/(τ_* − τ)`, if constants were given.
    pub lower_bound_violation: Option<T>,
    /// Distance bound at the minimizer and at `u`, if constants were given.
    pub distance_bound_violation: Option<T>,
}

impl<T: Real> MoreauYosidaReport<T> {
    pub fn max_violation(&self) -> T {
        [
            self.monotonicity_violation,
            self.upper_violation,
            self.trend_violation,
            self.lower_bound_violation.unwrap_or(T::zero()),
            self.distance_bound_violation.unwrap_or(T::zero()),
        ]
        .into_iter()
        .fold(T::zero(), T::max)
    }
}

/// Monotonicity, consistency and coercivity bounds of
/// `φ(τ, t, u) = min_v Φ(τ, t, u; v)` over an increasing list of step sizes.
pub fn moreau_yosida_checks<T, S, E, O>(
    space: &S,
    energy: &E,
    oracle: &O,
    u: &S::Point,
    t: T,
    taus: &[T],
    bound: Option<&CoercivityBound<T, S::Point>>,
) -> Result<MoreauYosidaReport<T>>
where
    T: Real,
    S: MetricSpace<T>,
    E: PerturbedEnergy<T, S::Point>,
    O: MinimizerOracle<T, S::Point>,
{
    if taus.is_empty() || taus.windows(2).any(|w| !(w[0] < w[1])) || !(taus[0] > T::zero()) {
        return Err(Error::param("tau_list", "must be positive and strictly increasing"));
    }
    let value = energy.energy(u)? + energy.perturbation(t, u)?;
    let two = T::lit(2.0);
    let mut phi = Vec::with_capacity(taus.len());
    let mut minimizers = Vec::with_capacity(taus.len());
    for &tau in taus {
        let v = oracle.solve(tau, t, u)?;
        let d = space.distance(u, &v);
        let p = d * d / (two * tau) + energy.energy(&v)? + energy.perturbation(t, &v)?;
        phi.push((tau, p));
        minimizers.push((v, d * d, p));
    }
    let mut monotonicity_violation = T::zero();
    let mut upper_violation = T::zero();
    let mut trend_violation = T::zero();
    for (i, &(_, p)) in phi.iter().enumerate() {
        upper_violation = upper_violation.max(p - value);
        for &(_, q) in &phi[i + 1..] {
            monotonicity_violation = monotonicity_violation.max(q - p);
        }
        if i > 0 {
            // gap to E + P may only shrink as τ decreases
            let gap_small = value - phi[i - 1].1;
            let gap_large = value - p;
            trend_violation = trend_violation.max(gap_small - gap_large);
        }
    }
    let (lower_bound_violation, distance_bound_violation) = match bound {
        Some(b) => {
            let du = space.distance(&b.u_star, u);
            let du2 = du * du;
            let mut lower = T::zero();
            let mut dist = T::zero();
            for (&(tau, p), (_, d2, phi_v)) in phi.iter().zip(&minimizers) {
                if !(tau < b.tau_star) {
                    continue;
                }
                let gap = b.tau_star - tau;
                lower = lower.max(b.c_star - du2 / gap - p);
                let factor = T::lit(4.0) * tau * b.tau_star / gap;
                dist = dist.max(*d2 - factor * (*phi_v - b.c_star + du2 / gap));
                // v = u: Φ(τ, t, u; u) = E(u) + P_t(u), distance 0
                dist = dist.max(-factor * (value - b.c_star + du2 / gap));
            }
            (Some(lower), Some(dist))
        }
        None => (None, None),
    };
    Ok(MoreauYosidaReport {
        phi,
        value,
        monotonicity_violation: monotonicity_violation.max(T::zero()),
        upper_violation: upper_violation.max(T::zero()),
        trend_violation: trend_violation.max(T::zero()),
        lower_bound_violation,
        distance_bound_violation,
    })
}
