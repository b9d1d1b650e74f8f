//! Command-line front end: `run`, `validate` and `examples list`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::catalog::{example, list_examples};
use crate::config::{build, parse_config, ConfigError, LoadedConfig};
use crate::error::Error;
use crate::exec::with_workers;
use crate::output::{prepare_dir, write_artifacts, RunInfo};
use crate::solver::integrate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

/// Caps the number of worker threads; results do not depend on it.
pub const WORKERS_ENV: &str = "COHO_EULER_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "coho-euler",
    version,
    about = "Symmetry-reduced Euler flow on cohomogeneity-one manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every structural, metric, profile and parity check without integrating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bundled example configurations.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    List,
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(
    args: I,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let workers = match workers_from_env() {
        Ok(w) => w,
        Err(msg) => {
            let _ = writeln!(err, "{msg}");
            return EXIT_VALIDATION;
        }
    };
    with_workers(workers, || run_cli(cli, out, err))
}

fn workers_from_env() -> Result<Option<usize>, String> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!(
                "{WORKERS_ENV} must be a positive integer, got {s:?}"
            )),
        },
    }
}

fn run_cli(cli: Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    match cli.command {
        Command::Examples {
            action: ExamplesAction::List,
        } => {
            for e in list_examples() {
                let _ = writeln!(out, "{:<20} {}", e.name, e.description);
            }
            EXIT_OK
        }
        Command::Validate { config } => match load(&config) {
            Ok(loaded) => validate_command(&loaded, out, err),
            Err(e) => config_error(e, err),
        },
        Command::Run { config, out: dir } => match load(&config) {
            Ok(loaded) => run_command(&loaded, dir.as_deref(), out, err),
            Err(e) => config_error(e, err),
        },
    }
}

/// Reads `path`, falling back to the bundled example of the same stem when
/// the file does not exist.
pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    if !path.exists() {
        let bundled = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(example)
            .filter(|_| path.extension().is_some_and(|x| x == "json"));
        if let Some(entry) = bundled {
            return entry.load();
        }
    }
    parse_config(path)
}

fn config_error(e: ConfigError, err: &mut (dyn Write + Send)) -> i32 {
    let _ = writeln!(err, "{e}");
    match e {
        ConfigError::Parse(_) => EXIT_PARSE,
        ConfigError::Invalid(_) => EXIT_VALIDATION,
    }
}

pub fn validate_command(
    loaded: &LoadedConfig,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32 {
    match build(loaded) {
        Err(e) => {
            let _ = writeln!(err, "invalid configuration:\n  {e}");
            EXIT_VALIDATION
        }
        Ok(prepared) => {
            let _ = writeln!(out, "{}", prepared.report);
            if prepared.report.passed() {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
    }
}

pub fn run_command(
    loaded: &LoadedConfig,
    out_dir: Option<&Path>,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32 {
    let config = &loaded.config;
    let prepared = match build(loaded) {
        Ok(p) if p.report.passed() => p,
        Ok(p) => {
            let _ = writeln!(err, "validation failed:\n{}", p.report);
            return EXIT_VALIDATION;
        }
        Err(e) => {
            let _ = writeln!(err, "invalid configuration:\n  {e}");
            return EXIT_VALIDATION;
        }
    };
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.directory.clone());
    if let Err(e) = prepare_dir(&dir) {
        let _ = writeln!(
            err,
            "output directory {} is not writable: {e}",
            dir.display()
        );
        return EXIT_VALIDATION;
    }
    let traj = match integrate(&prepared.problem, &prepared.solver) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_VALIDATION;
        }
    };
    let hash = config.hash();
    let info = RunInfo {
        config_hash: &hash,
        name: config.name.as_deref(),
        dt: config.solver.dt,
        t_end: config.solver.t_end,
        diagnostics_every: config.output.diagnostics_every,
    };
    if let Err(e) = write_artifacts(&dir, &traj, &info) {
        let _ = writeln!(err, "failed to write artifacts to {}: {e}", dir.display());
        return EXIT_VALIDATION;
    }
    let s = &traj.summary;
    let _ = writeln!(
        out,
        "{}: {} steps to t = {}, energy drift {:.3e}, speed drift {:.3e}, c1 max/initial {:.3}",
        config.name.as_deref().unwrap_or(s.kind),
        s.steps,
        s.t_final,
        s.max_energy_drift,
        s.max_speed_drift,
        if s.c1_initial > 0.0 {
            s.c1_max / s.c1_initial
        } else {
            1.0
        },
    );
    if !s.flags.is_empty() {
        let _ = writeln!(out, "flags: {:?}", s.flags);
    }
    let _ = writeln!(out, "artifacts: {}", dir.display());
    match &traj.error {
        Some(e @ Error::Numerical { .. }) => {
            let _ = writeln!(err, "{e}");
            if let Some(f) = &s.failure {
                let _ = writeln!(
                    err,
                    "failure record: kind={} step={} t={}",
                    f.kind, f.step, f.t
                );
            }
            EXIT_NUMERICAL
        }
        Some(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_NUMERICAL
        }
        None => EXIT_OK,
    }
}
