//! Flat `key = value` experiment configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gflow_core::density::{Density, Grid};
use gflow_core::energy::EnergySpec;
use gflow_core::jko::{InnerMethod, JkoConfig};
use gflow_core::potentials::{PotentialFamily, Profile, SharedPotential};
use gflow_core::profiles::{gaussian_pdf, Barenblatt};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?} (first set on line {first})")]
    Duplicate { key: String, line: usize, first: usize },
    #[error("{key}: cannot parse {value:?}: {reason}")]
    Invalid {
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("{key}: {reason}")]
    Constraint { key: &'static str, reason: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Zero,
    ModulatedQuadratic,
    ModulatedGaussianAttraction,
    SeparableConfinement,
}

impl FamilyName {
    const ALL: [(&'static str, FamilyName); 4] = [
        ("zero", FamilyName::Zero),
        ("modulated_quadratic", FamilyName::ModulatedQuadratic),
        ("modulated_gaussian_attraction", FamilyName::ModulatedGaussianAttraction),
        ("separable_confinement", FamilyName::SeparableConfinement),
    ];

    fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, f)| *f == self)
            .map(|(n, _)| *n)
            .unwrap_or("zero")
    }
}

impl FromStr for FamilyName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, f)| *f)
            .ok_or_else(|| format!("expected one of {}", Self::ALL.map(|(n, _)| n).join(", ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Gaussian,
    Barenblatt,
    Uniform,
}

impl InitialKind {
    fn name(self) -> &'static str {
        match self {
            InitialKind::Gaussian => "gaussian",
            InitialKind::Barenblatt => "barenblatt",
            InitialKind::Uniform => "uniform",
        }
    }
}

impl FromStr for InitialKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(InitialKind::Gaussian),
            "barenblatt" => Ok(InitialKind::Barenblatt),
            "uniform" => Ok(InitialKind::Uniform),
            _ => Err("expected gaussian, barenblatt or uniform".into()),
        }
    }
}

fn method_name(m: InnerMethod) -> &'static str {
    match m {
        InnerMethod::GradientDescent => "gd",
        InnerMethod::Preconditioned => "preconditioned",
    }
}

fn parse_method(s: &str) -> std::result::Result<InnerMethod, String> {
    match s {
        "gd" => Ok(InnerMethod::GradientDescent),
        "preconditioned" => Ok(InnerMethod::Preconditioned),
        _ => Err("expected gd or preconditioned".into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub n_particles: usize,
    pub m: f64,
    pub omega: f64,
    pub family: FamilyName,
    pub a0: f64,
    pub a1: f64,
    pub s: f64,
    pub profile: Profile,
    pub t_end: f64,
    pub tau: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub method: InnerMethod,
    pub seed: u64,
    pub initial: InitialKind,
    pub initial_mean: f64,
    pub initial_var: f64,
    pub initial_t0: f64,
    pub n_sub: usize,
}

const KEYS: [&str; 22] = [
    "domain.x_min",
    "domain.x_max",
    "grid.n_cells",
    "transport.M",
    "energy.m",
    "energy.omega",
    "potential.family",
    "potential.a0",
    "potential.a1",
    "potential.s",
    "potential.v",
    "time.T",
    "time.tau",
    "solver.inner_tol",
    "solver.inner_max_iter",
    "solver.method",
    "seed",
    "initial.kind",
    "initial.mean",
    "initial.var",
    "initial.t0",
    "n_sub",
];

impl Default for Config {
    fn default() -> Self {
        Self {
            x_min: -6.0,
            x_max: 6.0,
            n_cells: 400,
            n_particles: 400,
            m: 1.0,
            omega: 1.0,
            family: FamilyName::Zero,
            a0: 1.0,
            a1: 0.0,
            s: 1.0,
            profile: Profile::Quadratic,
            t_end: 0.5,
            tau: 1e-3,
            inner_tol: 1e-8 / 400.0,
            inner_max_iter: 5000,
            method: InnerMethod::GradientDescent,
            seed: 0,
            initial: InitialKind::Gaussian,
            initial_mean: 0.0,
            initial_var: 0.25,
            initial_t0: 0.1,
            n_sub: 4,
        }
    }
}

fn value<T: FromStr>(key: &'static str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::Invalid {
        key,
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

fn constraint(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        key,
        reason: reason.into(),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut seen: HashMap<&'static str, (usize, String)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let k = k.trim();
            let key = KEYS
                .iter()
                .copied()
                .find(|&known| known == k)
                .ok_or_else(|| ConfigError::UnknownKey {
                    line,
                    key: k.to_string(),
                })?;
            if let Some((first, _)) = seen.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    line,
                    first: *first,
                });
            }
            seen.insert(key, (line, v.trim().to_string()));
        }
        let mut c = Config::default();
        let get = |k: &str| seen.get(k).map(|(_, v)| v.as_str());
        macro_rules! set {
            ($field:expr, $key:literal) => {
                if let Some(raw) = get($key) {
                    $field = value($key, raw)?;
                }
            };
        }
        set!(c.x_min, "domain.x_min");
        set!(c.x_max, "domain.x_max");
        set!(c.n_cells, "grid.n_cells");
        set!(c.n_particles, "transport.M");
        set!(c.m, "energy.m");
        set!(c.omega, "energy.omega");
        set!(c.family, "potential.family");
        set!(c.a0, "potential.a0");
        set!(c.a1, "potential.a1");
        set!(c.s, "potential.s");
        if let Some(raw) = get("potential.v") {
            c.profile = raw.parse().map_err(|e: gflow_core::Error| ConfigError::Invalid {
                key: "potential.v",
                value: raw.to_string(),
                reason: e.to_string(),
            })?;
        }
        set!(c.t_end, "time.T");
        set!(c.tau, "time.tau");
        c.inner_tol = 1e-8 / c.n_particles.max(1) as f64;
        set!(c.inner_tol, "solver.inner_tol");
        set!(c.inner_max_iter, "solver.inner_max_iter");
        if let Some(raw) = get("solver.method") {
            c.method = parse_method(raw).map_err(|reason| ConfigError::Invalid {
                key: "solver.method",
                value: raw.to_string(),
                reason,
            })?;
        }
        set!(c.seed, "seed");
        set!(c.initial, "initial.kind");
        set!(c.initial_mean, "initial.mean");
        set!(c.initial_var, "initial.var");
        set!(c.initial_t0, "initial.t0");
        set!(c.n_sub, "n_sub");
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("domain.x_min", self.x_min),
            ("domain.x_max", self.x_max),
            ("energy.m", self.m),
            ("energy.omega", self.omega),
            ("potential.a0", self.a0),
            ("potential.a1", self.a1),
            ("potential.s", self.s),
            ("time.T", self.t_end),
            ("time.tau", self.tau),
            ("solver.inner_tol", self.inner_tol),
            ("initial.mean", self.initial_mean),
            ("initial.var", self.initial_var),
            ("initial.t0", self.initial_t0),
        ];
        if let Some((key, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(constraint(key, "must be finite"));
        }
        if !(self.x_min < self.x_max) {
            return Err(constraint("domain.x_max", "must exceed domain.x_min"));
        }
        if self.n_cells < 2 {
            return Err(constraint("grid.n_cells", "need at least 2 cells"));
        }
        if self.n_particles < 2 {
            return Err(constraint("transport.M", "need at least 2 particles"));
        }
        if !(self.m >= 1.0) {
            return Err(constraint("energy.m", format!("m must be ≥ 1, got {}", self.m)));
        }
        if !(self.omega > 0.0) {
            return Err(constraint("energy.omega", "must be positive"));
        }
        if self.family == FamilyName::ModulatedQuadratic && !(self.a0 > self.a1.abs()) {
            return Err(constraint("potential.a0", "modulated quadratic needs a0 > |a1|"));
        }
        if !(self.s > 0.0) {
            return Err(constraint("potential.s", "must be positive"));
        }
        if !(self.t_end > 0.0) {
            return Err(constraint("time.T", "must be positive"));
        }
        if !(self.tau > 0.0 && self.tau <= self.t_end) {
            return Err(constraint("time.tau", "must lie in (0, T]"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(constraint("solver.inner_tol", "must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(constraint("solver.inner_max_iter", "must be positive"));
        }
        if self.n_sub < 2 {
            return Err(constraint("n_sub", "need at least 2 nodes"));
        }
        match self.initial {
            InitialKind::Gaussian => {
                if !(self.initial_var > 0.0) {
                    return Err(constraint("initial.var", "must be positive"));
                }
                if !(self.initial_mean > self.x_min && self.initial_mean < self.x_max) {
                    return Err(constraint("initial.mean", "must lie inside the domain"));
                }
            }
            InitialKind::Barenblatt => {
                if !(self.m > 1.0) {
                    return Err(constraint("initial.kind", "barenblatt datum needs energy.m > 1"));
                }
                if !(self.initial_t0 > 0.0) {
                    return Err(constraint("initial.t0", "must be positive"));
                }
            }
            InitialKind::Uniform => {}
        }
        Ok(())
    }

    /// One `key = value` line per key in canonical order; floats use the
    /// shortest representation that parses back exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("domain.x_min", format!("{:?}", self.x_min));
        line("domain.x_max", format!("{:?}", self.x_max));
        line("grid.n_cells", self.n_cells.to_string());
        line("transport.M", self.n_particles.to_string());
        line("energy.m", format!("{:?}", self.m));
        line("energy.omega", format!("{:?}", self.omega));
        line("potential.family", self.family.name().to_string());
        line("potential.a0", format!("{:?}", self.a0));
        line("potential.a1", format!("{:?}", self.a1));
        line("potential.s", format!("{:?}", self.s));
        line("potential.v", self.profile.to_string());
        line("time.T", format!("{:?}", self.t_end));
        line("time.tau", format!("{:?}", self.tau));
        line("solver.inner_tol", format!("{:?}", self.inner_tol));
        line("solver.inner_max_iter", self.inner_max_iter.to_string());
        line("solver.method", method_name(self.method).to_string());
        line("seed", self.seed.to_string());
        line("initial.kind", self.initial.name().to_string());
        line("initial.mean", format!("{:?}", self.initial_mean));
        line("initial.var", format!("{:?}", self.initial_var));
        line("initial.t0", format!("{:?}", self.initial_t0));
        line("n_sub", self.n_sub.to_string());
        out
    }

    pub fn grid(&self) -> gflow_core::Result<Grid<f64>> {
        Grid::new(self.x_min, self.x_max, self.n_cells)
    }

    pub fn family(&self) -> PotentialFamily<f64> {
        match self.family {
            FamilyName::Zero => PotentialFamily::Zero,
            FamilyName::ModulatedQuadratic => PotentialFamily::ModulatedQuadratic {
                a0: self.a0,
                a1: self.a1,
            },
            FamilyName::ModulatedGaussianAttraction => PotentialFamily::ModulatedGaussianAttraction {
                a0: self.a0,
                a1: self.a1,
                s: self.s,
            },
            FamilyName::SeparableConfinement => PotentialFamily::SeparableConfinement {
                a0: self.a0,
                a1: self.a1,
                v: self.profile,
            },
        }
    }

    pub fn potential(&self) -> gflow_core::Result<SharedPotential<f64>> {
        self.family().build()
    }

    pub fn spec(&self) -> gflow_core::Result<EnergySpec<f64>> {
        EnergySpec::new(self.m, self.potential()?, self.omega)
    }

    pub fn jko(&self) -> gflow_core::Result<JkoConfig<f64>> {
        let mut cfg = JkoConfig::new(self.grid()?, self.n_particles, self.tau, self.t_end);
        cfg.inner_tol = self.inner_tol;
        cfg.inner_max_iter = self.inner_max_iter;
        cfg.method = self.method;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_density(&self) -> gflow_core::Result<Density<f64>> {
        let grid = self.grid()?;
        match self.initial {
            InitialKind::Gaussian => Density::from_fn(grid, |x| gaussian_pdf(x, self.initial_mean, self.initial_var)),
            InitialKind::Barenblatt => {
                let b = Barenblatt::new(self.m)?;
                let c = self.initial_mean;
                Density::from_fn(grid, |x| b.density(self.initial_t0, x - c))
            }
            InitialKind::Uniform => Ok(Density::uniform(grid)),
        }
    }
}
