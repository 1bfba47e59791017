//! Subcommand bodies. Each returns the process exit code on success.

use std::fs;
use std::path::Path;

use gflow_core::density::density_to_quantiles;
use gflow_core::fv::{fv_run, fv_run_snapshots, DEFAULT_CFL_SAFETY};
use gflow_core::highfreq::{sweep_omega, sweep_omega_euclidean, RunMonitors};
use gflow_core::jko::{classical_estimates_fp, run_jko, trajectory_from_states, InnerMethod, WassersteinProblem};
use gflow_core::mms::{energy_inequality_check, moreau_yosida_checks, CoercivityBound, EuclideanDemo};
use gflow_core::potentials::validate_assumptions;
use gflow_core::transport::w2_distance;
use log::info;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::output::{self, num, CheckRow, Status};
use crate::EXIT_INVARIANT;

/// Step sizes probed by the Moreau–Yosida checks.
pub const MY_TAUS: [f64; 10] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];

pub const DEFAULT_OMEGAS: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

fn prepare(config: &Path, out: &Path) -> Result<Config> {
    let cfg = Config::load(config)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let echo = out.join("effective_config.txt");
    fs::write(&echo, cfg.emit()).map_err(|e| CliError::io(&echo, e))?;
    Ok(cfg)
}

pub fn run(config: &Path, out: &Path) -> Result<u8> {
    let cfg = prepare(config, out)?;
    let spec = cfg.spec()?;
    let traj = run_jko(&cfg.initial_density()?, &spec, &cfg.jko()?)?;
    output::write_run(out, &traj, &spec)?;
    let iterations: usize = traj.inner.iter().map(|s| s.iterations).sum();
    println!(
        "{} steps to t = {}, {} inner iterations, wrote {}",
        traj.len() - 1,
        num(*traj.times().last().unwrap_or(&0.0)),
        iterations,
        out.display()
    );
    Ok(0)
}

pub fn sweep(config: &Path, omegas: &[f64], out: &Path) -> Result<u8> {
    let cfg = prepare(config, out)?;
    let result = sweep_omega(&cfg.initial_density()?, cfg.potential()?, cfg.m, omegas, &cfg.jko()?);
    let result = match result {
        Ok(r) => r,
        Err(gflow_core::Error::SweepAborted {
            omega,
            completed,
            source,
        }) => {
            output::write_partial_sweep(&out.join("sweep.csv"), &completed, omega)?;
            return Err(gflow_core::Error::SweepAborted {
                omega,
                completed,
                source,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    output::write_sweep(&out.join("sweep.csv"), &result)?;
    output::write_monitors(&out.join("monitors.csv"), &result.monitors)?;
    for (&o, &e) in result.omegas.iter().zip(&result.errors) {
        println!("omega {:>8}  e = {}", num(o), num(e));
    }
    match result.fit {
        Some(f) => println!("fitted slope {} constant {}", num(f.slope), num(f.constant)),
        None => println!("fitted slope unavailable (errors at noise floor)"),
    }
    for (name, ratio) in RunMonitors::<f64>::names().iter().zip(result.monitor_ratios()) {
        println!("{name} max/min over omega {}", num(ratio));
    }
    Ok(0)
}

pub fn oracle(config: &Path, compare: Option<&Path>, out: &Path, tol: f64) -> Result<u8> {
    let cfg = prepare(config, out)?;
    let spec = cfg.spec()?;
    let rho0 = cfg.initial_density()?;
    let Some(dir) = compare else {
        let rho = fv_run(&rho0, &spec, cfg.t_end, DEFAULT_CFL_SAFETY)?;
        output::write_density(&out.join("oracle_density.csv"), &rho)?;
        println!("finite-volume state at t = {} written", num(cfg.t_end));
        return Ok(0);
    };
    let stored = output::load_run(dir)?;
    let fv = fv_run_snapshots(&rho0, &spec, &stored.times, DEFAULT_CFL_SAFETY)?;
    let n = stored.states[0].len();
    let mut rows = Vec::with_capacity(fv.len());
    for ((&t, q), rho) in stored.times.iter().zip(&stored.states).zip(&fv) {
        rows.push((t, w2_distance(q, &density_to_quantiles(rho, n)?)?));
    }
    if let Some(last) = fv.last() {
        output::write_density(&out.join("oracle_density.csv"), last)?;
    }
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let check = CheckRow {
        suite: "cross_validation",
        metric: "max_w2".into(),
        value: max,
        tolerance: tol,
        status: if max <= tol { Status::Pass } else { Status::Fail },
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out.join("oracle.csv"))?;
    w.write_record(["t", "w2"])?;
    for (t, d) in &rows {
        w.write_record([num(*t), num(*d)])?;
    }
    w.flush()?;
    println!("{} max W2 {} (tolerance {})", check.status, num(max), num(tol));
    Ok(if check.status == Status::Fail {
        EXIT_INVARIANT
    } else {
        0
    })
}

pub fn validate_potential(config: &Path, out: &Path, samples: usize) -> Result<u8> {
    let cfg = prepare(config, out)?;
    let report = validate_assumptions(cfg.potential()?, &cfg.grid()?, cfg.omega * cfg.t_end, samples, cfg.seed)?;
    output::write_validation(&out.join("validation.csv"), &report)?;
    for c in &report.checks {
        println!(
            "{:<16} {:>24} ceiling {:>12} {}",
            c.assumption,
            num(c.estimate),
            num(c.ceiling),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    Ok(if report.all_pass() { 0 } else { EXIT_INVARIANT })
}

/// Runs the invariant suites on a stored run and writes `check.csv` next to it.
pub fn check(dir: &Path) -> Result<u8> {
    let cfg = Config::load(&dir.join("effective_config.txt"))?;
    let spec = cfg.spec()?;
    let jko = cfg.jko()?;
    let stored = output::load_run(dir)?;
    let mut states = stored.states.into_iter();
    let q0 = states.next().ok_or_else(|| CliError::Data("empty run".into()))?;
    let steps: Vec<_> = stored.taus[1..].iter().copied().zip(states).collect();
    let traj = trajectory_from_states(q0, steps, &spec, &jko)?;
    let rows = invariant_rows(&traj, &spec, &jko, cfg.n_sub, cfg.t_end)?;
    output::write_checks(&dir.join("check.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<20} {:<28} {:>24} tol {:>12} {}",
            r.suite,
            r.metric,
            num(r.value),
            num(r.tolerance),
            r.status
        );
    }
    Ok(if rows.iter().any(|r| r.status == Status::Fail) {
        EXIT_INVARIANT
    } else {
        0
    })
}

/// Discrete energy inequality, Moreau–Yosida checks at five snapshots, and
/// classical estimates.
pub fn invariant_rows(
    traj: &gflow_core::Trajectory,
    spec: &gflow_core::EnergySpec,
    jko: &gflow_core::JkoConfig,
    n_sub: usize,
    t_end: f64,
) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let problem = WassersteinProblem::new(spec, jko);
    let ei = energy_inequality_check(&problem, &problem, &problem, &traj.run, n_sub)?;
    rows.push(CheckRow {
        suite: "energy_inequality",
        metric: "max_violation".into(),
        value: ei.max_violation,
        tolerance: ei.tolerance,
        status: if ei.warn { Status::Warn } else { Status::Pass },
    });

    let mut precise = jko.clone();
    precise.method = InnerMethod::Preconditioned;
    let probe = WassersteinProblem::new(spec, &precise);
    let bound = CoercivityBound {
        c_star: probe.coercivity_constant(t_end),
        tau_star: 1.0,
        u_star: traj.run.initial.clone(),
    };
    let n = traj.len() - 1;
    let mut ks = vec![0, n / 4, n / 2, 3 * n / 4, n];
    ks.dedup();
    for k in ks {
        let (t, q, _) = traj.snapshot(k);
        let rep = moreau_yosida_checks(&probe, &probe, &probe, q, t, &MY_TAUS, Some(&bound))?;
        let tol = 64.0 * f64::EPSILON * (1.0 + rep.value.abs());
        let v = rep.max_violation();
        rows.push(CheckRow {
            suite: "moreau_yosida",
            metric: format!("max_violation_k{k}"),
            value: v,
            tolerance: tol,
            status: if v <= tol { Status::Pass } else { Status::Fail },
        });
    }

    let fp = classical_estimates_fp(traj, spec)?;
    let info_row = |metric: &str, value: f64| CheckRow {
        suite: "classical_estimates",
        metric: metric.into(),
        value,
        tolerance: f64::INFINITY,
        status: Status::Pass,
    };
    rows.push(info_row("dissipation_sum", fp.scheme.dissipation_sum));
    rows.push(info_row("max_energy", fp.max_energy));
    rows.push(info_row("max_second_moment", fp.max_second_moment));
    rows.push(CheckRow {
        suite: "classical_estimates",
        metric: "descent_violations".into(),
        value: fp.scheme.descent_violations.len() as f64,
        tolerance: 0.0,
        status: if fp.scheme.descent_violations.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        },
    });
    rows.push(CheckRow {
        suite: "classical_estimates",
        metric: "unbounded_monitors".into(),
        value: fp.scheme.unbounded.len() as f64,
        tolerance: 0.0,
        status: if fp.scheme.unbounded.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        },
    });
    Ok(rows)
}

pub struct DemoArgs<'a> {
    pub eps: f64,
    pub b: &'a [f64],
    pub u0: Option<&'a [f64]>,
    pub omegas: &'a [f64],
    pub tau: f64,
    pub t_end: f64,
    pub out: &'a Path,
}

pub fn demo(args: &DemoArgs<'_>) -> Result<u8> {
    fs::create_dir_all(args.out).map_err(|e| CliError::io(args.out, e))?;
    let ones = vec![1.0; args.b.len()];
    let u0 = args.u0.unwrap_or(&ones);
    let sweep = sweep_omega_euclidean(u0, args.eps, args.b, args.omegas, args.tau, args.t_end)?;
    output::write_demo(&args.out.join("demo.csv"), &sweep)?;
    for ((&o, &a), &s) in sweep.omegas.iter().zip(&sweep.analytic).zip(&sweep.scheme) {
        println!("omega {:>8}  analytic {}  scheme {}", num(o), num(a), num(s));
    }
    let bound = 5.0 * args.tau * args.t_end;
    println!(
        "max |scheme - analytic| {} (5 tau T = {})",
        num(sweep.max_gap),
        num(bound)
    );
    if let Some(f) = sweep.analytic_fit {
        println!("analytic slope {}", num(f.slope));
    }
    // closed-form resolvent against the generic checks
    let demo = EuclideanDemo::new(args.eps, args.b.to_vec(), args.omegas[0])?;
    let t = 0.3 * args.t_end;
    let rep = moreau_yosida_checks(&demo, &demo, &demo, &u0.to_vec(), t, &MY_TAUS, None)?;
    let phi_err = rep
        .phi
        .iter()
        .map(|&(tau, p)| (p - demo.moreau_yosida(tau, t, u0)).abs())
        .fold(0.0, f64::max);
    info!("Moreau-Yosida closed-form gap {phi_err}");
    println!(
        "Moreau-Yosida violation {} closed-form gap {}",
        num(rep.max_violation()),
        num(phi_err)
    );
    let ok = sweep.max_gap <= bound && rep.max_violation() <= 1e-12 && phi_err <= 1e-12;
    Ok(if ok { 0 } else { EXIT_INVARIANT })
}
