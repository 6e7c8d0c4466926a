//! Argument handling, run-directory management and exit codes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, RunConfig};
use crate::experiments::{self, Experiment, Outputs, RunError};
use crate::manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "KFLK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kflock", version, about = "Kinetic flocking model: PDE, particle and equilibrium experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment, cumulant and entropy experiments for space-homogeneous data.
    Homogeneous(RunArgs),
    /// Solve the kinetic equation on the torus.
    #[command(name = "solve-pde")]
    SolvePde(RunArgs),
    /// Picard iterates and their contraction gaps.
    Picard(RunArgs),
    /// Interacting particle system over one or more seeds.
    Particles(RunArgs),
    /// Particle/PDE convergence study.
    Meanfield(RunArgs),
    /// Residuals of the Gaussian equilibria under grid refinement.
    Stationary(RunArgs),
    /// Steady states for kernels 1 + λ cos 2πkx.
    Perturb(RunArgs),
    /// Check a configuration and exit.
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `[CONFIG] [--key value]... [--out DIR] [--threads N]`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
    args: Vec<String>,
}

/// The arguments after the subcommand name.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn parse_invocation(args: &[String]) -> Result<Invocation, String> {
    let mut inv = Invocation::default();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            if inv.config.is_some() || !inv.overrides.is_empty() {
                return Err(format!("unexpected argument `{a}`"));
            }
            inv.config = Some(PathBuf::from(a));
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| format!("--{flag} needs a value"))?;
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "out" => inv.out = Some(PathBuf::from(value)),
            "threads" => inv.threads = Some(parse_threads(&value).map_err(|e| format!("--threads: {e}"))?),
            _ => inv.overrides.push((key, value)),
        }
    }
    Ok(inv)
}

fn parse_threads(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn default_out_dir() -> PathBuf {
    Path::new("out").join(chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string())
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (which, rest) = match cli.command {
        Command::Homogeneous(a) => (Some(Experiment::Homogeneous), a.args),
        Command::SolvePde(a) => (Some(Experiment::SolvePde), a.args),
        Command::Picard(a) => (Some(Experiment::Picard), a.args),
        Command::Particles(a) => (Some(Experiment::Particles), a.args),
        Command::Meanfield(a) => (Some(Experiment::Meanfield), a.args),
        Command::Stationary(a) => (Some(Experiment::Stationary), a.args),
        Command::Perturb(a) => (Some(Experiment::Perturb), a.args),
        Command::Validate(a) => (None, a.args),
    };
    let inv = match parse_invocation(&rest) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cfg = match config::load(inv.config.as_deref(), &inv.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let Some(which) = which else {
        println!("configuration is valid");
        return EXIT_OK;
    };
    if which == Experiment::Picard {
        if let Some(i) = cfg.picard_budget_issue() {
            eprintln!("error: invalid configuration:\n  {i}");
            return EXIT_CONFIG;
        }
    }
    let threads = match inv.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => match parse_threads(&s) {
                Ok(n) => Some(n),
                Err(e) => {
                    eprintln!("error: {THREADS_ENV}: {e}");
                    return EXIT_CONFIG;
                }
            },
            Err(_) => None,
        },
    };
    execute(which, &cfg, &inv.out.unwrap_or_else(default_out_dir), threads)
}

/// Runs one experiment into `dir` and writes its manifest.
pub fn execute(which: Experiment, cfg: &RunConfig, dir: &Path, threads: Option<usize>) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_IO;
        }
    };
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_IO;
    }
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let clock = Instant::now();
    let mut outputs = Outputs::new(dir);
    let result = pool.install(|| experiments::run(which, cfg, &mut outputs));
    let (status, code, report) = match result {
        Ok(rep) if rep.hard_failures.is_empty() => ("ok".to_string(), EXIT_OK, rep),
        Ok(rep) => (format!("invariant violated: {}", rep.hard_failures.join(", ")), EXIT_NUMERICAL, rep),
        Err(e) => {
            let code = match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Numerical(_) => EXIT_NUMERICAL,
                RunError::Output(_) => EXIT_IO,
            };
            (e.to_string(), code, Default::default())
        }
    };
    let manifest = RunManifest {
        command: which.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        started_at,
        wall_seconds: clock.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
        outputs: outputs.files().to_vec(),
        checks: report.checks,
        metrics: report.metrics,
        status: status.clone(),
    };
    if let Err(e) = manifest.write(dir) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_IO;
    }
    for (name, ok) in &manifest.checks {
        println!("{:<28} {}", name, if *ok { "pass" } else { "FAIL" });
    }
    if code == EXIT_OK {
        println!("{} files written to {}", manifest.outputs.len(), dir.display());
    } else {
        eprintln!("error: {status}");
    }
    code
}
