//! Acceptance suite. One line per criterion; exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use gflow_core::density::{density_to_quantiles, Density, Grid};
use gflow_core::energy::EnergySpec;
use gflow_core::fv::cross_validate;
use gflow_core::highfreq::{sweep_omega, sweep_omega_euclidean, SweepResult};
use gflow_core::jko::{euler_lagrange_residual, run_jko, GaussianBump, InnerMethod, JkoConfig, WassersteinProblem};
use gflow_core::mms::{energy_inequality_check, moreau_yosida_checks, CoercivityBound, EuclideanDemo};
use gflow_core::potentials::{PotentialFamily, ZeroPotential};
use gflow_core::profiles::{gaussian_pdf, Barenblatt};
use gflow_core::transport::w2_distance;

const OMEGAS: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
const MY_TAUS: [f64; 10] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];

type Outcome = Result<(bool, String), String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn std_grid() -> Grid<f64> {
    Grid::new(-6.0, 6.0, 400).unwrap()
}

fn std_initial() -> Density<f64> {
    Density::from_fn(std_grid(), |x| gaussian_pdf(x, 0.0, 0.25)).unwrap()
}

fn heat_spec() -> EnergySpec<f64> {
    EnergySpec::new(1.0, Arc::new(ZeroPotential), 1.0).unwrap()
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn heat_flow() -> Outcome {
    let cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
    let start = Instant::now();
    let traj = run_jko(&std_initial(), &heat_spec(), &cfg).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let exact = Density::from_fn(std_grid(), |x| gaussian_pdf(x, 0.0, 1.25)).map_err(e)?;
    let d = w2_distance(traj.final_state(), &density_to_quantiles(&exact, 400).map_err(e)?).map_err(e)?;
    Ok((
        d <= 0.02 && secs <= 60.0,
        format!("W2 = {d:.3e} (<= 0.02), runtime {secs:.1} s (<= 60 s)"),
    ))
}

fn porous_medium() -> Outcome {
    let b = Barenblatt::new(2.0).map_err(e)?;
    let t0 = 0.1;
    let grid = Grid::new(-3.0, 3.0, 600).map_err(e)?;
    let rho0 = Density::from_fn(grid, |x| b.density(t0, x)).map_err(e)?;
    let spec = EnergySpec::new(2.0, Arc::new(ZeroPotential), 1.0).map_err(e)?;
    let traj = run_jko(&rho0, &spec, &JkoConfig::new(grid, 400, 1e-3, 0.25)).map_err(e)?;
    let err = traj.final_density().l1_error_vs(|x| b.density(t0 + 0.25, x));
    Ok((err <= 0.05, format!("L1 = {err:.3e} (<= 0.05)")))
}

fn quadratic_sweep() -> Result<(SweepResult<f64>, f64), String> {
    let w = PotentialFamily::ModulatedQuadratic { a0: 1.0, a1: 0.5 }
        .build()
        .map_err(e)?;
    let cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
    let start = Instant::now();
    let r = sweep_omega(&std_initial(), w, 1.0, &OMEGAS, &cfg).map_err(e)?;
    Ok((r, start.elapsed().as_secs_f64()))
}

fn rate(sweep: &Result<(SweepResult<f64>, f64), String>) -> Outcome {
    let (r, secs) = sweep.as_ref().map_err(Clone::clone)?;
    let Some(fit) = r.fit else {
        return Ok((false, "no fit (errors at noise floor)".into()));
    };
    Ok((
        fit.slope <= -0.5 && *secs <= 900.0,
        format!("slope = {:.3} (<= -0.5), runtime {secs:.1} s (<= 900 s)", fit.slope),
    ))
}

fn gaussian_sweep() -> Outcome {
    let w = PotentialFamily::ModulatedGaussianAttraction {
        a0: 1.0,
        a1: 0.5,
        s: 1.0,
    }
    .build()
    .map_err(e)?;
    let mut cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
    cfg.method = InnerMethod::Preconditioned;
    let r = sweep_omega(&std_initial(), w, 1.0, &OMEGAS, &cfg).map_err(e)?;
    let errs = &r.errors;
    let monotone = errs.windows(2).all(|p| p[1] <= 1.1 * p[0]);
    let (first, last) = (errs[0], errs[errs.len() - 1]);
    Ok((
        monotone && last <= first / 4.0,
        format!(
            "nonincreasing within 10%: {monotone}, e(64)/e(1) = {:.3e} (<= 0.25)",
            last / first
        ),
    ))
}

fn euclidean_rate() -> Outcome {
    let (tau, t_end) = (1e-3, 1.0);
    let start = Instant::now();
    let s = sweep_omega_euclidean(&[1.0, -0.5], 0.5, &[1.0, 1.0], &OMEGAS, tau, t_end).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let slope = s.analytic_fit.map_or(f64::NAN, |f| f.slope);
    let gap_ok = s.max_gap <= 5.0 * tau * t_end;
    Ok((
        gap_ok && slope <= -0.9 && secs <= 10.0,
        format!(
            "gap = {:.3e} (<= {:.0e}), slope = {slope:.3} (<= -0.9), runtime {secs:.2} s",
            s.max_gap,
            5.0 * tau * t_end
        ),
    ))
}

fn energy_inequality() -> Outcome {
    let spec = heat_spec();
    let cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
    let traj = run_jko(&std_initial(), &spec, &cfg).map_err(e)?;
    let p = WassersteinProblem::new(&spec, &cfg);
    let rep = energy_inequality_check(&p, &p, &p, &traj.run, 4).map_err(e)?;
    Ok((
        rep.max_violation <= rep.tolerance,
        format!("max violation = {:.3e} (<= {:.3e})", rep.max_violation, rep.tolerance),
    ))
}

fn moreau_yosida() -> Outcome {
    let demo = EuclideanDemo::new(0.5, vec![1.0, 1.0], 8.0).map_err(e)?;
    let mut euclid_worst: f64 = 0.0;
    for (t, u) in [(0.0, vec![1.0, -0.5]), (0.37, vec![-2.0, 0.25]), (1.0, vec![0.0, 3.0])] {
        let rep = moreau_yosida_checks(&demo, &demo, &demo, &u, t, &MY_TAUS, None).map_err(e)?;
        let phi_gap = rep
            .phi
            .iter()
            .map(|&(tau, p)| (p - demo.moreau_yosida(tau, t, &u)).abs())
            .fold(0.0, f64::max);
        euclid_worst = euclid_worst.max(rep.max_violation()).max(phi_gap);
    }

    let grid = std_grid();
    let w = PotentialFamily::ModulatedQuadratic { a0: 1.0, a1: 0.5 }
        .build()
        .map_err(e)?;
    let spec = EnergySpec::new(1.0, w, 8.0).map_err(e)?;
    let mut cfg = JkoConfig::new(grid, 400, 1e-3, 0.5);
    let traj = run_jko(&std_initial(), &spec, &cfg).map_err(e)?;
    cfg.method = InnerMethod::Preconditioned;
    let p = WassersteinProblem::new(&spec, &cfg);
    let bound = CoercivityBound {
        c_star: p.coercivity_constant(0.5),
        tau_star: 1.0,
        u_star: traj.run.initial.clone(),
    };
    let mut violations = 0;
    for k in [0, 100, 250, 500] {
        let (t, q, _) = traj.snapshot(k);
        let rep = moreau_yosida_checks(&p, &p, &p, q, t, &MY_TAUS, Some(&bound)).map_err(e)?;
        if rep.max_violation() > 64.0 * f64::EPSILON * (1.0 + rep.value.abs()) {
            violations += 1;
        }
    }
    Ok((
        euclid_worst <= 1e-12 && violations == 0,
        format!("Euclidean worst = {euclid_worst:.1e} (<= 1e-12), Wasserstein violations = {violations} (== 0)"),
    ))
}

fn uniform_estimates(sweep: &Result<(SweepResult<f64>, f64), String>) -> Outcome {
    let (r, _) = sweep.as_ref().map_err(Clone::clone)?;
    let ratios = r.monitor_ratios();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let listed = ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    Ok((worst <= 3.0, format!("max/min ratios [{listed}] (each <= 3)")))
}

fn euler_lagrange() -> Outcome {
    let spec = heat_spec();
    let psi_prime = (2.0 / std::f64::consts::E).sqrt();
    let mut maxima = Vec::new();
    let mut bounded = true;
    for factor in [1.0, 0.1] {
        let mut cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
        cfg.inner_tol *= factor;
        let traj = run_jko(&std_initial(), &spec, &cfg).map_err(e)?;
        let bound = 10.0 * cfg.inner_tol * 400.0 * psi_prime;
        let mut worst: f64 = 0.0;
        for k in 1..traj.len() {
            let (_, prev, _) = traj.snapshot(k - 1);
            let (t, next, _) = traj.snapshot(k);
            let tau = traj.records()[k - 1].tau;
            worst = worst.max(euler_lagrange_residual(next, prev, tau, t, &spec, &GaussianBump).map_err(e)?);
        }
        bounded &= worst <= bound;
        maxima.push(worst);
    }
    let shrink = maxima[0] / maxima[1];
    Ok((
        bounded && shrink >= 5.0,
        format!(
            "max residual {:.3e} -> {:.3e}, shrink {shrink:.1}x (>= 5), within bound: {bounded}",
            maxima[0], maxima[1]
        ),
    ))
}

fn cross_validation() -> Outcome {
    let cfg = JkoConfig::new(std_grid(), 400, 1e-3, 0.5);
    let heat = heat_spec();
    let traj = run_jko(&std_initial(), &heat, &cfg).map_err(e)?;
    let a = cross_validate(&traj, &heat, 0.05).map_err(e)?;

    let w = PotentialFamily::ModulatedGaussianAttraction {
        a0: 1.0,
        a1: 0.5,
        s: 1.0,
    }
    .build()
    .map_err(e)?;
    let spec = EnergySpec::new(1.0, w, 8.0).map_err(e)?;
    let mut cfg = cfg;
    cfg.method = InnerMethod::Preconditioned;
    let traj = run_jko(&std_initial(), &spec, &cfg).map_err(e)?;
    let b = cross_validate(&traj, &spec, 0.05).map_err(e)?;
    Ok((
        a.pass && b.pass,
        format!(
            "heat max W2 = {:.3e}, Gaussian omega=8 max W2 = {:.3e} (<= 0.05)",
            a.max_w2, b.max_w2
        ),
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let config = dir.path().join("sweep.txt");
    std::fs::write(
        &config,
        "potential.family = modulated_quadratic\npotential.a1 = 0.5\ntime.T = 0.5\n",
    )
    .map_err(e)?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_gflow"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(e)?;
        if !status.status.success() {
            return Err(format!("sweep exited with {}", status.status));
        }
        outputs.push(std::fs::read(out.join("sweep.csv")).map_err(e)?);
    }
    let same = outputs[0] == outputs[1];
    Ok((
        same,
        format!(
            "sweep.csv identical across two runs: {same} ({} bytes)",
            outputs[0].len()
        ),
    ))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let sweep = quadratic_sweep();
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 heat flow", Box::new(heat_flow)),
        ("2 porous medium", Box::new(porous_medium)),
        ("3 high-frequency rate", Box::new(|| rate(&sweep))),
        ("4 non-convex kernel limit", Box::new(gaussian_sweep)),
        ("5 Euclidean rate", Box::new(euclidean_rate)),
        ("6 discrete energy inequality", Box::new(energy_inequality)),
        ("7 Moreau-Yosida invariants", Box::new(moreau_yosida)),
        ("8 omega-uniform estimates", Box::new(|| uniform_estimates(&sweep))),
        ("9 Euler-Lagrange residual", Box::new(euler_lagrange)),
        ("10 cross-validation", Box::new(cross_validation)),
        ("11 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let (pass, detail) = check().unwrap_or_else(|err| (false, format!("error: {err}")));
        if !pass {
            failed += 1;
        }
        println!("[{}] criterion {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
