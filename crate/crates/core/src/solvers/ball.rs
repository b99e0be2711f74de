//! Projected descent for the minimum of `J` on the closed ball `‖u‖ <= ρ`.

use crate::energy::{compute_constants, Functional};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::models::ProblemInstance;

use super::{is_stationary, newton_refine, Check, CriticalPointReport, IterRecord, Kind, StepRule};

#[derive(Debug, Clone)]
pub struct BallConfig {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Starting direction; defaults to the profile of `f`.
    pub seed: Option<Field>,
    pub allow_unguaranteed: bool,
    /// Iterations without a 1% improvement of `‖g‖` before the projected
    /// descent hands over to Newton refinement.
    pub stall_window: usize,
    pub refine_steps: usize,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            grad_tol: 1e-6,
            max_iters: 5000,
            step_rule: StepRule::default(),
            seed: None,
            allow_unguaranteed: false,
            stall_window: 8,
            refine_steps: 30,
        }
    }
}

pub fn find_ball_minimizer(instance: &ProblemInstance, grad_tol: f64) -> Result<CriticalPointReport> {
    find_ball_minimizer_with(instance, &BallConfig { grad_tol, ..BallConfig::default() })
}

pub fn find_ball_minimizer_with(instance: &ProblemInstance, config: &BallConfig) -> Result<CriticalPointReport> {
    let constants = compute_constants(instance)?;
    let rho = constants.rho;
    if instance.lambda() >= constants.lambda0 && !config.allow_unguaranteed {
        return Err(Error::Precondition(format!(
            "lambda = {} is not below lambda0 = {}",
            instance.lambda(),
            constants.lambda0
        )));
    }
    let functional = Functional::new(instance);
    let seed = match &config.seed {
        Some(s) => {
            instance.grid().ensure_same(s.grid())?;
            s.abs()
        }
        None => instance.weight().samples().clone(),
    };
    let norm = seed.h1_norm();
    if norm == 0.0 {
        return Err(Error::Usage("seed is zero".into()));
    }
    let seed = seed.scale(1.0 / norm);

    // J(tψ) ~ -(λ/q) t^q ∫ f ψ^q < 0 for small t
    let mut t = rho;
    let mut start = None;
    for _ in 0..60 {
        t *= 0.5;
        let u = seed.scale(t);
        if functional.evaluate(&u)?.total < 0.0 {
            start = Some(u);
            break;
        }
    }
    let Some(start) = start else {
        return Err(Error::NotConverged {
            iterations: 60,
            detail: "no negative-energy start inside the ball (lambda too small for the grid's f?)".into(),
        });
    };

    let rule = &config.step_rule;
    let mut state = functional.state(&start)?;
    let mut log = Vec::new();
    let mut projected = Vec::new();
    let mut step = rule.initial;
    let mut converged = false;
    let mut stalled = false;
    let mut best_grad = f64::INFINITY;
    let mut since_improvement = 0;
    let mut iteration = 0;
    loop {
        log.push(IterRecord {
            iteration,
            energy: state.energy.total,
            grad_norm: state.grad_norm,
            h1_norm: state.h1_norm,
        });
        if is_stationary(&state, config.grad_tol) {
            converged = true;
            break;
        }
        if iteration >= config.max_iters {
            break;
        }
        // |u| has a fixed point with g != 0 where the discrete minimizer
        // dips below zero; stop projecting once that is all that is left
        if state.grad_norm < 0.99 * best_grad {
            best_grad = state.grad_norm;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= config.stall_window {
                stalled = true;
                break;
            }
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..rule.max_backtracks {
            let mut cand = state.u.axpy(-s, &state.gradient)?.abs();
            let cand_norm = cand.h1_norm();
            let active = cand_norm > rho;
            if active {
                cand = cand.scale(rho / cand_norm);
            }
            // projected Armijo: J(P(u - s g)) <= J(u) - c ‖u - P(u - s g)‖² / s
            let moved = cand.axpy(-1.0, &state.u)?.h1_norm();
            let j = functional.evaluate(&cand)?.total;
            if j <= state.energy.total - rule.armijo * moved * moved / s {
                accepted = Some((cand, active));
                break;
            }
            s *= rule.shrink;
        }
        let Some((next, active)) = accepted else {
            log::warn!("ball descent: line search failed at |g| = {:.3e}", state.grad_norm);
            stalled = true;
            break;
        };
        step = (s / rule.shrink).min(rule.initial);
        projected.push(active);
        state = functional.state(&next)?;
        iteration += 1;
    }

    let monotone = log.windows(2).all(|w| w[1].energy <= w[0].energy);
    let descent_steps = log.len();
    if stalled {
        log::info!("ball descent stalled at |g| = {:.3e}; refining without projection", state.grad_norm);
        let outcome = newton_refine(&functional, &state.u, config.grad_tol, config.refine_steps, iteration + 1)?;
        log.extend(outcome.log);
        iteration += 1 + outcome.iterations;
        converged = outcome.converged;
        state = outcome.state;
    }
    let mut report = CriticalPointReport::from_state(instance, state, Kind::BallMin, iteration, converged, log);
    let min = report.u.min();
    let tail = projected.len().min(10);
    let interior_tail = projected[projected.len() - tail..].iter().all(|a| !a);
    report.checks.push(Check::new("converged", converged, format!("|g| = {:.3e}", report.grad_norm)));
    report.checks.push(Check::new("negative_level", report.energy < 0.0, format!("J = {:.9e}", report.energy)));
    report.checks.push(Check::new(
        "interior",
        report.h1_norm < rho,
        format!("‖u‖ = {:.6e} < rho = {rho:.6e}", report.h1_norm),
    ));
    report.checks.push(Check::new("nonnegative", min >= 0.0, format!("min u = {min:.3e}")));
    report.checks.push(Check::new("monotone_descent", monotone, format!("{descent_steps} descent iterates")));
    report.checks.push(Check::new(
        "projection_inactive_at_end",
        interior_tail,
        format!("last {tail} steps without projection"),
    ));
    Ok(report)
}
