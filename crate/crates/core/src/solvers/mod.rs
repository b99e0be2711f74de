//! Critical-point search: the mountain-pass saddle, the minimizer on the
//! small ball `‖u‖ <= ρ`, and the least-energy selection among them.

mod ball;
mod mountain_pass;
mod newton;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{compute_constants, EnergyBreakdown, Functional, State};
use crate::error::{Error, Result};
use crate::field::{random_smooth_field, Field};
use crate::models::ProblemInstance;

pub use ball::{find_ball_minimizer, find_ball_minimizer_with, BallConfig};
pub use mountain_pass::{find_mountain_pass, MountainPassConfig};
pub use newton::{gmres, newton_refine, GmresOutcome, NewtonOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Saddle,
    BallMin,
    LeastEnergy,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Saddle => "saddle",
            Kind::BallMin => "ball_min",
            Kind::LeastEnergy => "least_energy",
        })
    }
}

/// Named pass/fail outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

/// One row of an iterate log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub h1_norm: f64,
}

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { initial: 1.0, shrink: 0.5, armijo: 1e-4, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct CriticalPointReport {
    pub u: Field,
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    pub grad_norm: f64,
    pub h1_norm: f64,
    pub kind: Kind,
    pub iterations: usize,
    pub converged: bool,
    /// `(2/5)‖u‖² - λ (10-q)/(10q) |f| ‖u‖^q`, a lower bound for critical values.
    pub coercive_floor: f64,
    pub checks: Vec<Check>,
    pub log: Vec<IterRecord>,
}

impl CriticalPointReport {
    pub(crate) fn from_state(
        instance: &ProblemInstance,
        state: State,
        kind: Kind,
        iterations: usize,
        converged: bool,
        log: Vec<IterRecord>,
    ) -> Self {
        let q = instance.q();
        let n = state.h1_norm;
        let coercive_floor =
            0.4 * n * n - instance.lambda() * (10.0 - q) / (10.0 * q) * instance.weight().norm_f() * n.powf(q);
        CriticalPointReport {
            energy: state.energy.total,
            breakdown: state.energy,
            grad_norm: state.grad_norm,
            h1_norm: state.h1_norm,
            u: state.u,
            kind,
            iterations,
            converged,
            coercive_floor,
            checks: Vec::new(),
            log,
        }
    }

    pub fn checks_passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `‖g‖ <= tol · max(1, ‖u‖)`.
pub(crate) fn is_stationary(state: &State, grad_tol: f64) -> bool {
    state.grad_norm <= grad_tol * state.h1_norm.max(1.0)
}

/// Picks the lowest-energy report (ties go to the smaller `‖u‖`) and tags it
/// as the least-energy candidate.
pub fn least_energy_select(reports: &[CriticalPointReport]) -> Result<CriticalPointReport> {
    if reports.is_empty() {
        return Err(Error::Usage("no critical points to select from".into()));
    }
    if let Some(r) = reports.iter().find(|r| !r.converged) {
        return Err(Error::Precondition(format!("{} report did not converge", r.kind)));
    }
    let best = reports
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.h1_norm.total_cmp(&b.h1_norm)))
        .expect("nonempty");
    let mut out = best.clone();
    out.kind = Kind::LeastEnergy;
    let floor = reports.iter().map(|r| r.coercive_floor).fold(f64::INFINITY, f64::min);
    out.checks.push(Check::new(
        "coercivity_floor",
        out.energy >= floor,
        format!("m = {:.9e} >= {:.9e}", out.energy, floor),
    ));
    if reports.iter().any(|r| r.kind == Kind::BallMin) {
        out.checks.push(Check::new("negative_least_energy", out.energy < 0.0, format!("m = {:.9e}", out.energy)));
    }
    Ok(out)
}

/// Independent re-verification of a reported critical point.
#[derive(Debug, Clone)]
pub struct Verification {
    pub kind: Kind,
    pub strong_residual: f64,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Strong-form residual tolerance relative to `‖u‖_{H^1}`.
pub const STRONG_RESIDUAL_TOL: f64 = 1e-4;

pub fn verify_solution(instance: &ProblemInstance, report: &CriticalPointReport) -> Result<Verification> {
    let functional = Functional::new(instance);
    let u = &report.u;
    let grid = *instance.grid();
    let constants = compute_constants(instance)?;
    let mut checks = Vec::new();

    // strong form (-Δ+1)u - Kφ|u|³u - λ f σ_q(u), assembled without the gradient
    let state = functional.state(u)?;
    let h1 = state.h1_norm;
    let residual = state.gradient.helmholtz();
    let strong = if h1 > 0.0 { residual.l2_norm() / h1 } else { f64::INFINITY };
    checks.push(Check::new(
        "strong_residual",
        strong < STRONG_RESIDUAL_TOL,
        format!("{strong:.3e} (tol {STRONG_RESIDUAL_TOL:.0e})"),
    ));

    // weak form against random directions, by central differences of J
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tau = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = random_smooth_field(grid, &mut rng, false);
        let v = v.scale(1.0 / v.h1_norm());
        let plus = functional.evaluate(&u.axpy(tau, &v)?)?.total;
        let minus = functional.evaluate(&u.axpy(-tau, &v)?)?.total;
        worst = worst.max(((plus - minus) / (2.0 * tau)).abs());
    }
    let weak_tol = 1e-5 * h1.max(1.0);
    checks.push(Check::new(
        "weak_form",
        h1 > 0.0 && worst <= weak_tol,
        format!("max |<J'(u), v>| = {worst:.3e} over 10 unit directions (tol {weak_tol:.1e})"),
    ));

    let max = u.max();
    checks.push(Check::new("nonnegative", u.min() >= 0.0, format!("min u = {:.3e}", u.min())));
    let x0 = instance.potential().x0();
    let reach = 0.5 * grid.half_width();
    let interior_positive = u
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| crate::models::distance(grid.point(*i), x0) <= reach)
        .all(|(_, &v)| v > 0.0);
    checks.push(Check::new(
        "positive_interior",
        max > 0.0 && interior_positive,
        format!("u > 0 on |x - x0| <= {reach}"),
    ));
    let floor = 1e-6 * constants.rho;
    checks.push(Check::new("nontrivial", h1 >= floor, format!("‖u‖ = {h1:.3e} (floor {floor:.1e})")));

    let energy = state.energy.total;
    match report.kind {
        Kind::Saddle => checks.push(Check::new("positive_energy", energy > 0.0, format!("J = {energy:.9e}"))),
        Kind::BallMin => {
            checks.push(Check::new("negative_energy", energy < 0.0, format!("J = {energy:.9e}")));
            checks.push(Check::new(
                "inside_ball",
                h1 < constants.rho,
                format!("‖u‖ = {h1:.6e} < rho = {:.6e}", constants.rho),
            ));
        }
        Kind::LeastEnergy => {}
    }
    Ok(Verification { kind: report.kind, strong_residual: strong, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid3;
    use crate::models::builtin_instance;

    fn fake(kind: Kind, energy: f64, norm: f64) -> CriticalPointReport {
        let g = Grid3::new(4.0, 8).unwrap();
        let inst = builtin_instance("const_K_gaussian_f", g, 1.5, 0.1).unwrap();
        let state = State {
            u: Field::zeros(g),
            phi: Field::zeros(g),
            energy: EnergyBreakdown { quadratic: 0.0, nonlocal: 0.0, concave: 0.0, total: energy },
            gradient: Field::zeros(g),
            grad_norm: 0.0,
            h1_norm: norm,
        };
        CriticalPointReport::from_state(&inst, state, kind, 1, true, Vec::new())
    }

    #[test]
    fn selects_lowest_energy() {
        // energies consistent with the coercive floor at these norms
        let r = least_energy_select(&[fake(Kind::Saddle, 2.0, 3.0), fake(Kind::BallMin, -1e-6, 0.009)]).unwrap();
        assert_eq!(r.kind, Kind::LeastEnergy);
        assert_eq!(r.energy, -1e-6);
        assert!(r.all_checks_pass());
    }

    #[test]
    fn ties_prefer_smaller_norm() {
        let r = least_energy_select(&[fake(Kind::BallMin, -0.1, 0.6), fake(Kind::BallMin, -0.1, 0.5)]).unwrap();
        assert_eq!(r.h1_norm, 0.5);
    }

    #[test]
    fn single_and_empty_inputs() {
        let r = least_energy_select(&[fake(Kind::Saddle, 1.0, 2.0)]).unwrap();
        assert_eq!(r.energy, 1.0);
        assert!(least_energy_select(&[]).is_err());
        let mut bad = fake(Kind::Saddle, 1.0, 2.0);
        bad.converged = false;
        assert!(matches!(least_energy_select(&[bad]), Err(Error::Precondition(_))));
    }
}
