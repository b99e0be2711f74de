//! Command-line driver: configuration, the four subcommands and their files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence (or a
//! failed check in `verify`), 3 violated precondition.

mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{
    cmd_solve, run_constants, run_solve, run_sweep, run_verify, SolveOutcome, SuiteRow, SweepRow, VerifyOutcome,
    CONSTANTS_COLUMNS, SUMMARY_COLUMNS, SWEEP_COLUMNS,
};
pub use config::{BallSeed, LambdaSpec, ProblemSource, RunConfig, SolverSettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidInstance(_) | Error::Io(_) => EXIT_CONFIG,
        Error::NotConverged { .. } | Error::Numeric(_) => EXIT_NOT_CONVERGED,
        Error::Usage(_) | Error::Precondition(_) | Error::GridMismatch(_) | Error::Leakage { .. } => EXIT_PRECONDITION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "spcrit", version, about = "Critical Schrödinger-Poisson solver")]
pub struct Cli {
    /// TOML run configuration; the canonical run when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run the solvers even when lambda >= lambda0.
    #[arg(long, global = true)]
    pub force: bool,
    /// Treat boundary leakage as an error instead of a warning.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides [solver] seed).
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants S, rho, lambda0, C0 and the level bound.
    Constants,
    /// Mountain-pass and ball-minimizer solutions with verification.
    Solve,
    /// Identity and inequality suite.
    Verify,
    /// One solve per lambda, in parallel.
    Sweep {
        /// Comma-separated lambda values, read like the config's lambda
        /// (fractions of lambda0 when it uses `lambda_fraction`).
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        lambdas: String,
    },
}

/// `SP_THREADS`, if set.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var("SP_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("SP_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

pub fn parse_lambda_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Usage(format!("bad lambda value `{s}`"))))
        .collect()
}

impl Cli {
    /// The configuration with command-line overrides applied.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.force |= self.force;
        cfg.strict |= self.strict;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.solver.seed = seed;
        }
        Ok(cfg)
    }
}

/// Runs a parsed command line, printing a short report to `out`; returns the
/// exit status.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            let _ = writeln!(out, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = cli.run_config()?;
    let threads = thread_limit()?;
    match &cli.command {
        Command::Constants => {
            let c = run_constants(&cfg)?;
            writeln!(out, "{}", CONSTANTS_COLUMNS.join(","))?;
            writeln!(out, "{}", [c.s, c.rho, c.lambda0, c.c0, c.level_bound].map(output::num).join(","))?;
            Ok(EXIT_OK)
        }
        Command::Solve => {
            let o = cmd_solve(&cfg)?;
            for r in o.saddle.iter().chain(o.ball.iter()).chain(o.least.iter()) {
                writeln!(
                    out,
                    "{:<13} J = {:>16.9e}  |g| = {:.2e}  ‖u‖ = {:.6}  checks {}/{}",
                    r.kind.to_string(),
                    r.energy,
                    r.grad_norm,
                    r.h1_norm,
                    r.checks_passed(),
                    r.checks.len()
                )?;
            }
            if !o.guaranteed {
                writeln!(out, "lambda >= lambda0: results are not covered by the existence theory")?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let v = run_verify(&cfg)?;
            for r in &v.rows {
                writeln!(out, "{:<28} {}  {}", r.check, if r.passed { "pass" } else { "FAIL" }, r.detail)?;
            }
            match v.precondition {
                Some(e) => Err(e),
                None if v.passed() => Ok(EXIT_OK),
                None => Ok(EXIT_NOT_CONVERGED),
            }
        }
        Command::Sweep { lambdas } => {
            let values = parse_lambda_list(lambdas)?;
            let rows = run_sweep(&cfg, &values, threads)?;
            for r in &rows {
                let show = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_else(|| "-".into());
                writeln!(
                    out,
                    "lambda = {:.6e} ({:.3} lambda0)  c = {}  c~ = {}  {}",
                    r.lambda,
                    r.lambda_fraction,
                    show(r.c),
                    show(r.c_tilde),
                    r.status
                )?;
            }
            Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
    }
}
