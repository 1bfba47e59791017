use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gflow_cli::commands::{self, DemoArgs, DEFAULT_OMEGAS};

#[derive(Parser)]
#[command(
    name = "gflow",
    version,
    about = "Minimizing-movement solver for non-autonomous Fokker–Planck flows"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn default_omegas() -> Vec<f64> {
    DEFAULT_OMEGAS.to_vec()
}

#[derive(Subcommand)]
enum Cmd {
    /// Single trajectory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance to the averaged flow across frequencies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = default_omegas())]
        omegas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-volume reference, optionally compared with a stored run.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Sampled report on the structural assumptions of the potential.
    ValidatePotential {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Invariant suites on a stored run.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Euclidean test problem with a closed-form solution.
    Demo {
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        b: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        u0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', default_values_t = default_omegas())]
        omegas: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run { config, out } => commands::run(config, out),
        Cmd::Sweep { config, omegas, out } => commands::sweep(config, omegas, out),
        Cmd::Oracle {
            config,
            compare,
            out,
            tol,
        } => commands::oracle(config, compare.as_deref(), out, *tol),
        Cmd::ValidatePotential { config, out, samples } => commands::validate_potential(config, out, *samples),
        Cmd::Check { input } => commands::check(input),
        Cmd::Demo {
            eps,
            b,
            u0,
            omegas,
            tau,
            t_end,
            out,
        } => commands::demo(&DemoArgs {
            eps: *eps,
            b,
            u0: u0.as_deref(),
            omegas,
            tau: *tau,
            t_end: *t_end,
            out,
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
