//! CSV artifacts. Floats are written in their shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gflow_core::density::{Density, QuantileRep};
use gflow_core::energy::{h1_seminorm, internal_energy, EnergySpec};
use gflow_core::highfreq::{EuclideanSweep, RateFit, RunMonitors, SweepResult};
use gflow_core::jko::Trajectory;
use gflow_core::potentials::ValidationReport;

use crate::error::{CliError, Result};

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn finish(w: csv::Writer<BufWriter<File>>, footer: Option<String>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(f) = footer {
        writeln!(inner, "{f}")?;
    }
    inner.flush()?;
    Ok(())
}

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "k",
    "t_k",
    "tau_k",
    "W2_step",
    "energy_internal",
    "energy_interaction",
    "second_moment",
    "entropy",
    "h1_seminorm",
    "slope_bound",
];

/// `trajectory.csv`, `density_<k>.csv` and `quantiles_<k>.csv`.
pub fn write_run(dir: &Path, traj: &Trajectory<f64>, spec: &EnergySpec<f64>) -> Result<()> {
    let mut w = writer(&dir.join("trajectory.csv"))?;
    w.write_record(TRAJECTORY_HEADER)?;
    let run = &traj.run;
    let rows = std::iter::once((
        0,
        0.0,
        0.0,
        0.0,
        run.initial_energy,
        run.initial_perturbation,
        0.0,
        &run.initial,
    ))
    .chain(run.records.iter().map(|r| {
        (
            r.k,
            r.t,
            r.tau,
            r.d2_prev.sqrt(),
            r.energy,
            r.perturbation,
            r.slope_bound,
            &r.u,
        )
    }));
    for (k, t, tau, w2, e_int, e_w, slope, q) in rows {
        let rho = &traj.densities[k];
        w.write_record([
            k.to_string(),
            num(t),
            num(tau),
            num(w2),
            num(e_int),
            num(e_w),
            num(q.moments().second_moment),
            num(internal_energy(q, 1.0)?),
            num(h1_seminorm(rho, spec.m)),
            num(slope),
        ])?;
        write_density(&dir.join(format!("density_{k}.csv")), rho)?;
        write_quantiles(&dir.join(format!("quantiles_{k}.csv")), q)?;
    }
    finish(w, None)
}

pub fn write_density(path: &Path, rho: &Density<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "rho"])?;
    let grid = rho.grid();
    for (j, &v) in rho.values().iter().enumerate() {
        w.write_record([num(grid.center(j)), num(v)])?;
    }
    finish(w, None)
}

pub fn write_quantiles(path: &Path, q: &QuantileRep<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "x"])?;
    for (i, &x) in q.positions().iter().enumerate() {
        w.write_record([i.to_string(), num(x)])?;
    }
    finish(w, None)
}

/// A run read back from disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    pub states: Vec<QuantileRep<f64>>,
}

fn parse_field(path: &Path, rec: &csv::StringRecord, idx: usize) -> Result<f64> {
    rec.get(idx)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Data(format!("{}: bad field {idx} in {:?}", path.display(), rec)))
}

pub fn load_run(dir: &Path) -> Result<StoredRun> {
    let path = dir.join("trajectory.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (mut times, mut taus) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        times.push(parse_field(&path, &rec, 1)?);
        taus.push(parse_field(&path, &rec, 2)?);
    }
    if times.is_empty() {
        return Err(CliError::Data(format!("{}: no rows", path.display())));
    }
    let mut states = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let qpath = dir.join(format!("quantiles_{k}.csv"));
        let mut rdr =
            csv::Reader::from_path(&qpath).map_err(|e| CliError::Data(format!("{}: {e}", qpath.display())))?;
        let mut xs = Vec::new();
        for rec in rdr.records() {
            xs.push(parse_field(&qpath, &rec?, 1)?);
        }
        states.push(QuantileRep::new(xs)?);
    }
    Ok(StoredRun { times, taus, states })
}

fn fit_footer(fit: Option<RateFit<f64>>) -> String {
    let (s, c) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.constant));
    format!("# slope={}, constant={}", num(s), num(c))
}

pub fn write_sweep(path: &Path, result: &SweepResult<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["omega", "sup_w2_error"])?;
    for (&o, &e) in result.omegas.iter().zip(&result.errors) {
        w.write_record([num(o), num(e)])?;
    }
    finish(w, Some(fit_footer(result.fit)))
}

/// Completed pairs of an aborted sweep.
pub fn write_partial_sweep(path: &Path, completed: &[(f64, f64)], failed: f64) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["omega", "sup_w2_error"])?;
    for &(o, e) in completed {
        w.write_record([num(o), num(e)])?;
    }
    finish(w, Some(format!("# aborted at omega={}", num(failed))))
}

pub fn write_monitors(path: &Path, monitors: &[RunMonitors<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["omega"];
    header.extend(RunMonitors::<f64>::names());
    header.push("inner_iterations");
    w.write_record(&header)?;
    for m in monitors {
        let mut row = vec![num(m.omega)];
        row.extend(m.values().iter().map(|&v| num(v)));
        row.push(m.inner_iterations.to_string());
        w.write_record(&row)?;
    }
    finish(w, None)
}

pub fn write_validation(path: &Path, report: &ValidationReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["assumption", "estimate", "ceiling", "pass"])?;
    for c in &report.checks {
        w.write_record([
            c.assumption.to_string(),
            num(c.estimate),
            num(c.ceiling),
            c.pass.to_string(),
        ])?;
    }
    let notes = report
        .notes
        .iter()
        .map(|n| format!("# {n}"))
        .collect::<Vec<_>>()
        .join("\n");
    finish(w, (!notes.is_empty()).then_some(notes))
}

pub fn write_demo(path: &Path, sweep: &EuclideanSweep<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["omega", "analytic_error", "scheme_error"])?;
    for ((&o, &a), &s) in sweep.omegas.iter().zip(&sweep.analytic).zip(&sweep.scheme) {
        w.write_record([num(o), num(a), num(s)])?;
    }
    let footer = format!(
        "{} (analytic)\n{} (scheme)",
        fit_footer(sweep.analytic_fit),
        fit_footer(sweep.scheme_fit)
    );
    finish(w, Some(footer))
}

/// `(suite, metric, value, tolerance, status)` rows.
pub fn write_checks(path: &Path, rows: &[CheckRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["suite", "metric", "value", "tolerance", "status"])?;
    for r in rows {
        w.write_record([
            r.suite.to_string(),
            r.metric.clone(),
            num(r.value),
            num(r.tolerance),
            r.status.to_string(),
        ])?;
    }
    finish(w, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub suite: &'static str,
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
    pub status: Status,
}
