use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gflow_cli::config::{Config, FamilyName, InitialKind};
use gflow_core::jko::InnerMethod;
use proptest::prelude::*;

const SMALL: &str = "\
# short run
domain.x_min = -4
domain.x_max = 4
grid.n_cells = 80
transport.M = 60
potential.family = modulated_quadratic
potential.a1 = 0.5
energy.omega = 4
time.T = 0.02
time.tau = 0.002
";

fn gflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.txt");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_check_then_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = gflow(&["run", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    let traj = fs::read_to_string(run.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("k,t_k,tau_k,W2_step,energy_internal,energy_interaction,"));
    assert_eq!(traj.lines().count(), 12);
    assert!(run.join("density_10.csv").exists() && run.join("quantiles_10.csv").exists());

    let echoed = Config::load(&run.join("effective_config.txt")).unwrap();
    assert_eq!(echoed, Config::parse_str(SMALL).unwrap());

    let out = gflow(&["check", "--in", "run"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let check = fs::read_to_string(run.join("check.csv")).unwrap();
    assert!(check.starts_with("suite,metric,value,tolerance,status\n"));
    assert!(!check.contains("FAIL"));

    let out = gflow(
        &["oracle", "--config", &cfg, "--compare", "run", "--out", "fv"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let rows = fs::read_to_string(tmp.path().join("fv/oracle.csv")).unwrap();
    assert_eq!(rows.lines().count(), 12);
}

#[test]
fn sweep_writes_fit_footer_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut files = Vec::new();
    for dir in ["a", "b"] {
        let out = gflow(
            &["sweep", "--config", &cfg, "--omegas", "1,2,4,8", "--out", dir],
            tmp.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(tmp.path().join(dir).join("sweep.csv")).unwrap());
        assert!(tmp.path().join(dir).join("monitors.csv").exists());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    assert!(text.starts_with("omega,sup_w2_error\n1.0,"));
    assert!(text.lines().last().unwrap().starts_with("# slope="));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in [
        "energy.m = 0.5\n",
        "time.T = 1\ntime.T = 2\n",
        "colour = blue\n",
        "time.tau = fast\n",
        "just words\n",
    ] {
        let cfg = write_config(tmp.path(), bad);
        let out = gflow(&["run", "--config", &cfg, "--out", "x"], tmp.path());
        assert_eq!(code(&out), 2, "{bad:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = gflow(&["run", "--config", "missing.txt", "--out", "x"], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn sublinear_diffusion_message_names_the_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "energy.m = 0.5\n");
    let out = gflow(&["run", "--config", &cfg, "--out", "x"], tmp.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("m must be ≥ 1, got 0.5"));
}

#[test]
fn check_without_run_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gflow(&["check", "--in", "nowhere"], tmp.path());
    assert_ne!(code(&out), 0);
}

#[test]
fn validate_potential_reports_each_assumption() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = gflow(
        &["validate-potential", "--config", &cfg, "--out", "v", "--samples", "200"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let first = fs::read_to_string(tmp.path().join("v/validation.csv")).unwrap();
    gflow(
        &["validate-potential", "--config", &cfg, "--out", "w", "--samples", "200"],
        tmp.path(),
    );
    let second = fs::read_to_string(tmp.path().join("w/validation.csv")).unwrap();
    assert_eq!(first, second);
    assert!(first.starts_with("assumption,estimate,ceiling,pass\n"));
}

#[test]
fn demo_passes_its_own_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gflow(
        &["demo", "--eps", "0.5", "--b", "1,1", "--u0", "1,-0.5", "--out", "d"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = fs::read_to_string(tmp.path().join("d/demo.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 8);
}

fn config_strategy() -> impl Strategy<Value = Config> {
    (
        (
            -10.0f64..-1.0,
            1.0f64..10.0,
            2usize..2000,
            2usize..2000,
            1.0f64..4.0,
            0.01f64..200.0,
        ),
        (
            prop::sample::select(vec![
                FamilyName::Zero,
                FamilyName::ModulatedQuadratic,
                FamilyName::ModulatedGaussianAttraction,
                FamilyName::SeparableConfinement,
            ]),
            0.5f64..3.0,
            -0.49f64..0.49,
            0.1f64..3.0,
        ),
        (
            0.01f64..2.0,
            0.001f64..1.0,
            1e-14f64..1e-4,
            1usize..100_000,
            any::<bool>(),
            any::<u64>(),
        ),
        (
            prop::sample::select(vec![InitialKind::Gaussian, InitialKind::Uniform]),
            -0.9f64..0.9,
            0.01f64..4.0,
            2usize..16,
        ),
    )
        .prop_map(
            |(
                (x0, x1, cells, m_part, m, omega),
                (family, a0, a1, s),
                (t, frac, tol, iters, pre, seed),
                (init, mean, var, n_sub),
            )| Config {
                x_min: x0,
                x_max: x1,
                n_cells: cells,
                n_particles: m_part,
                m,
                omega,
                family,
                a0,
                a1,
                s,
                t_end: t,
                tau: t * frac,
                inner_tol: tol,
                inner_max_iter: iters,
                method: if pre {
                    InnerMethod::Preconditioned
                } else {
                    InnerMethod::GradientDescent
                },
                seed,
                initial: init,
                initial_mean: mean,
                initial_var: var,
                n_sub,
                ..Config::default()
            },
        )
}

proptest! {
    #[test]
    fn emitted_config_parses_back_identically(cfg in config_strategy()) {
        prop_assume!(cfg.validate().is_ok());
        prop_assert_eq!(Config::parse_str(&cfg.emit()).unwrap(), cfg);
    }
}
