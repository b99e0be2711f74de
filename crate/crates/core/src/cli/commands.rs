//! The four subcommands as library functions. Each writes its files under the
//! configured output directory and returns what it computed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{
    bubble_estimates, compute_constants, level_bound_check, maximize_on_ray, mountain_pass_geometry_check,
    quadratic_minus_tenth_max, Bubble, ConstantsReport,
};
use crate::error::{Error, Result};
use crate::field::{integrate, random_smooth_field};
use crate::nonlocal::{check_sobolev_bounds, nonlocal_energy, solve_poisson_with};
use crate::solvers::{
    find_ball_minimizer_with, find_mountain_pass, least_energy_select, verify_solution, BallConfig,
    CriticalPointReport, MountainPassConfig, Verification,
};

use super::config::{BallSeed, LambdaSpec, RunConfig};
use super::output::{num, write_csv, write_field, write_iterates};

pub const CONSTANTS_COLUMNS: [&str; 5] = ["S", "rho", "lambda0", "C0", "level_bound"];

/// Computes the closed-form constants and writes `constants.csv`.
pub fn run_constants(cfg: &RunConfig) -> Result<ConstantsReport> {
    let c = compute_constants(&cfg.instance()?)?;
    let row = vec![num(c.s), num(c.rho), num(c.lambda0), num(c.c0), num(c.level_bound)];
    write_csv(&cfg.out_dir.join("constants.csv"), &CONSTANTS_COLUMNS, &[row])?;
    Ok(c)
}

/// Everything a solve produced, including partial results.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub constants: ConstantsReport,
    /// `λ < λ₀`, so existence of both solutions is guaranteed.
    pub guaranteed: bool,
    pub saddle: Option<CriticalPointReport>,
    pub ball: Option<CriticalPointReport>,
    pub least: Option<CriticalPointReport>,
    pub verifications: Vec<Verification>,
    /// `‖u₁ - u₂‖ / max(‖u₁‖, ‖u₂‖)`.
    pub separation: Option<f64>,
    /// Solver errors, by kind.
    pub failures: Vec<(String, String)>,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        let ok = |r: &Option<CriticalPointReport>| r.as_ref().is_some_and(|r| r.converged);
        ok(&self.saddle) && ok(&self.ball)
    }

    pub fn verification(&self, kind: crate::solvers::Kind) -> Option<&Verification> {
        self.verifications.iter().find(|v| v.kind == kind)
    }
}

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "kind",
    "J",
    "grad_norm",
    "h1_norm",
    "iterations",
    "converged",
    "checks_passed",
    "checks_total",
    "strong_residual",
    "verified",
    "guaranteed",
];

/// Runs both solvers, verifies them and selects the least-energy one.
/// Writes `summary.csv`, `checks.csv`, iterate logs and field dumps; never
/// fails on non-convergence (see [`cmd_solve`]).
pub fn run_solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let instance = cfg.instance()?;
    let constants = compute_constants(&instance)?;
    let guaranteed = instance.lambda() < constants.lambda0;
    if !guaranteed && !cfg.force {
        return Err(Error::Precondition(format!(
            "lambda = {} is not below lambda0 = {}; pass --force to run anyway",
            instance.lambda(),
            constants.lambda0
        )));
    }
    let s = &cfg.solver;
    let x0 = instance.potential().x0();
    let grid = *instance.grid();
    let mp = MountainPassConfig {
        seed_direction: Some(Bubble::new(s.saddle_seed_epsilon, x0).sample(grid)),
        path_nodes: s.path_nodes,
        max_iters: s.string_iters,
        grad_tol: s.grad_tol,
        refine_steps: s.refine_steps,
        allow_unguaranteed: cfg.force,
        strict: cfg.strict,
        ..MountainPassConfig::default()
    };
    let ball = BallConfig {
        seed: match s.ball_seed {
            BallSeed::Weight => None,
            BallSeed::Bubble => Some(Bubble::new(1.0, x0).sample(grid)),
        },
        grad_tol: s.grad_tol,
        max_iters: s.ball_iters,
        allow_unguaranteed: cfg.force,
        ..BallConfig::default()
    };

    let mut failures = Vec::new();
    let mut keep = |kind: &str, r: Result<CriticalPointReport>| match r {
        Ok(r) => Some(r),
        Err(e) => {
            log::error!("{kind}: {e}");
            failures.push((kind.to_string(), e.to_string()));
            None
        }
    };
    log::info!("solving {} at lambda = {}", instance.name(), instance.lambda());
    let saddle = keep("saddle", find_mountain_pass(&instance, &mp));
    let ball = keep("ball_min", find_ball_minimizer_with(&instance, &ball));
    let found: Vec<CriticalPointReport> = saddle.iter().chain(ball.iter()).cloned().collect();
    let least = if found.iter().all(|r| r.converged) && !found.is_empty() {
        keep("least_energy", least_energy_select(&found))
    } else {
        None
    };
    let mut verifications = Vec::new();
    for r in saddle.iter().chain(ball.iter()) {
        verifications.push(verify_solution(&instance, r)?);
    }
    let separation = match (&saddle, &ball) {
        (Some(a), Some(b)) => {
            let d = a.u.axpy(-1.0, &b.u)?.h1_norm();
            Some(d / a.h1_norm.max(b.h1_norm))
        }
        _ => None,
    };
    let outcome = SolveOutcome { constants, guaranteed, saddle, ball, least, verifications, separation, failures };
    write_solve_outputs(&cfg.out_dir, &outcome)?;
    Ok(outcome)
}

fn write_solve_outputs(dir: &Path, o: &SolveOutcome) -> Result<()> {
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for r in o.saddle.iter().chain(o.ball.iter()).chain(o.least.iter()) {
        let v = o.verification(r.kind).filter(|_| r.kind != crate::solvers::Kind::LeastEnergy);
        summary.push(vec![
            r.kind.to_string(),
            num(r.energy),
            num(r.grad_norm),
            num(r.h1_norm),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.checks_passed().to_string(),
            r.checks.len().to_string(),
            v.map(|v| num(v.strong_residual)).unwrap_or_default(),
            v.map(|v| v.passed().to_string()).unwrap_or_default(),
            o.guaranteed.to_string(),
        ]);
        for c in &r.checks {
            checks.push(vec![
                r.kind.to_string(),
                "solver".into(),
                c.name.clone(),
                c.passed.to_string(),
                c.detail.clone(),
            ]);
        }
        if let Some(v) = v {
            for c in &v.checks {
                checks.push(vec![
                    r.kind.to_string(),
                    "verify".into(),
                    c.name.clone(),
                    c.passed.to_string(),
                    c.detail.clone(),
                ]);
            }
        }
        if r.kind != crate::solvers::Kind::LeastEnergy {
            write_iterates(&dir.join(format!("iterates_{}.csv", r.kind)), &r.log)?;
            write_field(dir, &format!("u_{}", r.kind), &r.u)?;
        }
    }
    if let Some(sep) = o.separation {
        checks.push(vec![
            "pair".into(),
            "solver".into(),
            "separation".into(),
            (sep > 0.1).to_string(),
            format!("‖u1 - u2‖ / max norm = {sep:.6e}"),
        ]);
    }
    for (kind, err) in &o.failures {
        checks.push(vec![kind.clone(), "solver".into(), "error".into(), "false".into(), err.clone()]);
    }
    write_csv(&dir.join("summary.csv"), &SUMMARY_COLUMNS, &summary)?;
    write_csv(&dir.join("checks.csv"), &["kind", "source", "check", "passed", "detail"], &checks)
}

/// [`run_solve`], turning non-convergence into [`Error::NotConverged`] after
/// the partial outputs are written.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let outcome = run_solve(cfg)?;
    if !outcome.converged() {
        let iterations = outcome.saddle.iter().chain(outcome.ball.iter()).map(|r| r.iterations).max().unwrap_or(0);
        let mut detail: Vec<String> = outcome
            .saddle
            .iter()
            .chain(outcome.ball.iter())
            .filter(|r| !r.converged)
            .map(|r| format!("{} stopped at |g| = {:.3e}", r.kind, r.grad_norm))
            .collect();
        detail.extend(outcome.failures.iter().map(|(k, e)| format!("{k}: {e}")));
        return Err(Error::NotConverged { iterations, detail: detail.join("; ") });
    }
    Ok(outcome)
}

/// One row of the verification matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub rows: Vec<SuiteRow>,
    /// First usage or precondition error raised by a check.
    pub precondition: Option<Error>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.precondition.is_none() && self.rows.iter().all(|r| r.passed)
    }
}

struct Suite {
    rows: Vec<SuiteRow>,
    precondition: Option<Error>,
}

impl Suite {
    fn push(&mut self, check: &str, passed: bool, detail: String) {
        self.rows.push(SuiteRow { check: check.into(), passed, detail });
    }

    /// Records a failed row for `group` when `result` is an error; usage and
    /// precondition errors are kept for the exit status, others propagate.
    fn absorb<T>(&mut self, group: &str, result: Result<T>) -> Result<Option<T>> {
        match result {
            Ok(v) => Ok(Some(v)),
            Err(e @ (Error::Usage(_) | Error::Precondition(_))) => {
                self.push(group, false, e.to_string());
                self.precondition.get_or_insert(e);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

/// Runs the identity and inequality checks of the nonlocal and energy layers
/// as one suite and writes `verify.csv`.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyOutcome> {
    let instance = cfg.instance()?;
    let grid = *instance.grid();
    let s = &cfg.solver;
    let mut suite = Suite { rows: Vec::new(), precondition: None };
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

    // Poisson layer on random smooth decaying fields
    let (mut scaling, mut identity, mut negativity, mut symmetry) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut bounds_hold = true;
    let fields: Vec<_> = (0..s.verify_samples).map(|_| random_smooth_field(grid, &mut rng, false)).collect();
    for (i, u) in fields.iter().enumerate() {
        let sol = solve_poisson_with(&instance, u, cfg.strict)?;
        let phi = &sol.phi;
        let max_phi = phi.max();
        negativity = negativity.max(-phi.min() / max_phi);
        let energy = nonlocal_energy(&instance, u, phi)?;
        identity = identity.max((sol.d12_norm.powi(2) - energy).abs() / energy);
        for t in [0.5, 2.0, 3.0] {
            let scaled = solve_poisson_with(&instance, &u.scale(t), cfg.strict)?.phi;
            let expect = phi.scale(t.powi(5));
            let err = scaled.axpy(-1.0, &expect)?.max_abs() / expect.max_abs();
            scaling = scaling.max(err);
        }
        let v = &fields[(i + 1) % fields.len()];
        let phi_v = solve_poisson_with(&instance, v, cfg.strict)?.phi;
        let k = instance.potential().samples();
        let lhs = integrate(&k.zip_map(u, |k, u| k * u.abs().powi(5))?.zip_map(&phi_v, |a, b| a * b)?);
        let rhs = integrate(&k.zip_map(v, |k, v| k * v.abs().powi(5))?.zip_map(phi, |a, b| a * b)?);
        symmetry = symmetry.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        bounds_hold &= check_sobolev_bounds(&instance, u)?.hold();
    }
    let n = s.verify_samples;
    suite.push("poisson_scaling", scaling <= 1e-12, format!("max rel error {scaling:.3e} over {n} fields (tol 1e-12)"));
    suite.push(
        "poisson_identity",
        identity <= 1e-6,
        format!("max rel error {identity:.3e} over {n} fields (tol 1e-6)"),
    );
    suite.push(
        "poisson_nonnegative",
        negativity <= 1e-10,
        format!("max of -min(phi)/max(phi) = {negativity:.3e} (tol 1e-10)"),
    );
    suite.push("poisson_self_adjoint", symmetry <= 1e-8, format!("max rel asymmetry {symmetry:.3e} (tol 1e-8)"));
    suite.push("sobolev_bounds", bounds_hold, format!("both inequalities on {n} fields"));

    // constants and geometry
    let constants = compute_constants(&instance)?;
    suite.push(
        "alpha_floor_positive",
        constants.alpha_floor > 0.0,
        format!(
            "alpha_floor = {:.6e} at lambda/lambda0 = {:.4}",
            constants.alpha_floor,
            instance.lambda() / constants.lambda0
        ),
    );
    let geometry = mountain_pass_geometry_check(&instance, s.geometry_samples, s.seed)?;
    suite.push(
        "mountain_pass_geometry",
        geometry.passed(),
        format!(
            "{} of {} sphere samples below alpha_floor; min J = {:.6e}",
            geometry.violations, geometry.samples, geometry.min_energy
        ),
    );
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let c1 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let c2 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let exact = quadratic_minus_tenth_max(c1, c2);
        let found = maximize_on_ray(|t| c1 * t * t - c2 * t.powi(10))?.value;
        worst = worst.max((found - exact).abs() / exact);
    }
    suite.push("fibering_closed_form", worst <= 1e-8, format!("max rel error {worst:.3e} on 10 pairs (tol 1e-8)"));

    // bubble family on its own fine grid
    let bubble = cfg.bubble_grid().and_then(|g| cfg.instance_on(g).and_then(|i| i.with_lambda(instance.lambda())));
    if let Some(bi) = suite.absorb("bubble_grid", bubble)? {
        if let Some(b) = suite.absorb("bubble_estimates", bubble_estimates(&bi, &s.bubble_scales))? {
            suite.push("bubble_gradient_order", b.grad_ok(), format!("slope {:.4} (need >= 0.85)", b.slope_grad));
            suite.push("bubble_l2_order", b.l2_ok(), format!("slope {:.4} (need >= 0.85)", b.slope_l2));
            let detail = match b.slope_k {
                Some(k) => format!("slope {k:.4} (need >= {:.2})", b.beta - crate::energy::SLOPE_TOLERANCE),
                None => "identically zero (K constant)".to_string(),
            };
            suite.push("holder_defect_order", b.k_ok(), detail);
        }
        if let Some(l) = suite.absorb("level_bound", level_bound_check(&bi, &s.bubble_scales))? {
            suite.push(
                "level_bound_attained",
                l.bound_attained(),
                format!("min over scales of max_t J(t v) = {:.6e} vs bound {:.6e}", l.min_value(), l.level_bound),
            );
            suite.push(
                "level_maximizers_bracketed",
                l.maximizers_bracketed(),
                format!("t in ({:.4}, {:.4})", l.t_bracket.0, l.t_bracket.1),
            );
            suite.push(
                "level_concave_band",
                l.rows.iter().all(|r| r.within_concave_band()),
                "max g - concave <= max J <= max g at every scale".into(),
            );
        }
    }

    let rows: Vec<Vec<String>> =
        suite.rows.iter().map(|r| vec![r.check.clone(), r.passed.to_string(), r.detail.clone()]).collect();
    write_csv(&cfg.out_dir.join("verify.csv"), &["check", "passed", "detail"], &rows)?;
    Ok(VerifyOutcome { rows: suite.rows, precondition: suite.precondition })
}

/// One `λ` of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub lambda_fraction: f64,
    /// Mountain-pass level.
    pub c: Option<f64>,
    /// Ball-minimum level.
    pub c_tilde: Option<f64>,
    /// Least energy among the two.
    pub m: Option<f64>,
    pub converged: bool,
    pub status: String,
}

pub const SWEEP_COLUMNS: [&str; 7] = ["lambda", "lambda_fraction", "c", "c_tilde", "m", "converged", "status"];

/// Solves once per `λ` in `values` (read as the config's kind of `λ`),
/// concurrently on `threads` workers, and writes `sweep.csv` sorted by `λ`.
/// Each solve writes its own files under `lambda_<k>/`.
pub fn run_sweep(cfg: &RunConfig, values: &[f64], threads: Option<usize>) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Usage("the lambda list is empty".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Usage(format!("lambda values must be positive, got {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let before = sorted.len();
    sorted.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if sorted.len() < before {
        log::warn!("dropped {} duplicate lambda values", before - sorted.len());
    }
    let lambda0 = compute_constants(&cfg.instance()?)?.lambda0;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        sorted
            .par_iter()
            .enumerate()
            .map(|(k, &v)| {
                let mut local = cfg.clone();
                local.lambda = cfg.lambda.with_value(v);
                local.out_dir = cfg.out_dir.join(format!("lambda_{k:02}"));
                let (lambda, fraction) = match cfg.lambda {
                    LambdaSpec::Absolute(_) => (v, v / lambda0),
                    LambdaSpec::Fraction(_) => (v * lambda0, v),
                };
                let mut row = SweepRow {
                    lambda,
                    lambda_fraction: fraction,
                    c: None,
                    c_tilde: None,
                    m: None,
                    converged: false,
                    status: String::new(),
                };
                match run_solve(&local) {
                    Ok(o) => {
                        row.c = o.saddle.as_ref().map(|r| r.energy);
                        row.c_tilde = o.ball.as_ref().map(|r| r.energy);
                        row.m = o.least.as_ref().map(|r| r.energy);
                        row.converged = o.converged();
                        row.status = if row.converged {
                            "ok".into()
                        } else if let Some((kind, e)) = o.failures.first() {
                            format!("{kind}: {e}")
                        } else {
                            "not converged".into()
                        };
                    }
                    Err(e) => row.status = e.to_string(),
                }
                row
            })
            .collect()
    });

    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.lambda),
                num(r.lambda_fraction),
                opt(r.c),
                opt(r.c_tilde),
                opt(r.m),
                r.converged.to_string(),
                r.status.clone(),
            ]
        })
        .collect();
    write_csv(&cfg.out_dir.join("sweep.csv"), &SWEEP_COLUMNS, &table)?;
    Ok(rows)
}
