//! Elastic-string search for the mountain-pass critical point.
//!
//! A discrete path from `0` to an endpoint `e` with `J(e) < 0` is relaxed
//! node by node along `-∇J` and re-spaced to equal `H^1` arc length. When the
//! highest node stops improving, it is moved to the maximum of `J` on its ray
//! and refined by Newton steps. String nodes are kept nonnegative by `|u|`;
//! the Newton phase is not, so the `nonnegative` check reports on the result.

use crate::energy::{compute_constants, Bubble, Functional, State};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::models::ProblemInstance;

use super::{is_stationary, newton_refine, Check, CriticalPointReport, IterRecord, Kind, StepRule};

#[derive(Debug, Clone)]
pub struct MountainPassConfig {
    /// Number of nodes on the path, endpoints included.
    pub path_nodes: usize,
    /// Direction of the initial straight path; defaults to the cutoff bubble
    /// with `ε = 1` centred at the maximum point of `K`.
    pub seed_direction: Option<Field>,
    /// Budget of string relaxation sweeps.
    pub max_iters: usize,
    /// Relative stationarity threshold on `‖∇J‖ / max(1, ‖u‖)`.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Budget of Newton steps in the local refinement.
    pub refine_steps: usize,
    /// Sweeps without a 1% improvement of the top node's gradient before
    /// switching to refinement.
    pub stall_window: usize,
    /// Run even when `λ >= λ₀`.
    pub allow_unguaranteed: bool,
    pub strict: bool,
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        MountainPassConfig {
            path_nodes: 10,
            seed_direction: None,
            max_iters: 300,
            grad_tol: 1e-6,
            step_rule: StepRule::default(),
            refine_steps: 30,
            stall_window: 8,
            allow_unguaranteed: false,
            strict: false,
        }
    }
}

struct Node {
    state: State,
    step: f64,
}

pub fn find_mountain_pass(instance: &ProblemInstance, config: &MountainPassConfig) -> Result<CriticalPointReport> {
    if config.path_nodes < 8 {
        return Err(Error::Usage(format!("path needs at least 8 nodes, got {}", config.path_nodes)));
    }
    let constants = compute_constants(instance)?;
    if instance.lambda() >= constants.lambda0 && !config.allow_unguaranteed {
        return Err(Error::Precondition(format!(
            "lambda = {} is not below lambda0 = {}",
            instance.lambda(),
            constants.lambda0
        )));
    }
    let grid = *instance.grid();
    let functional = Functional::new(instance);
    let seed = match &config.seed_direction {
        Some(s) => {
            grid.ensure_same(s.grid())?;
            s.abs()
        }
        None => Bubble::new(1.0, instance.potential().x0()).sample(grid),
    };
    seed.check_leakage("mountain-pass seed", config.strict)?;
    let norm = seed.h1_norm();
    if norm == 0.0 {
        return Err(Error::Usage("seed direction is zero".into()));
    }
    let seed = seed.scale(1.0 / norm);

    // endpoint beyond the sphere with negative energy: double t until
    // J(t·seed) < 0, then pull it back to 1.2 times the zero crossing so the
    // path does not start in a region of huge gradients
    let fib = functional.fibering(&seed)?;
    let mut t = constants.rho;
    let mut doublings = 0;
    while fib.value(t) >= 0.0 {
        doublings += 1;
        if doublings > 40 {
            return Err(Error::Numeric("could not rescale the endpoint to negative energy".into()));
        }
        t *= 2.0;
    }
    let (mut lo, mut hi) = (fib.maximize()?.t, t);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fib.value(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t = (1.2 * hi).min(t);
    let end_energy = functional.evaluate(&seed.scale(t))?.total;
    if end_energy >= 0.0 {
        return Err(Error::Numeric(format!("endpoint energy {end_energy} is not negative")));
    }
    let endpoint = seed.scale(t);
    log::info!("mountain pass: endpoint at t = {t:.4}, J(e) = {end_energy:.6e}");

    let m = config.path_nodes;
    let mut nodes: Vec<Node> = (1..m - 1)
        .map(|i| {
            let u = endpoint.scale(i as f64 / (m - 1) as f64);
            functional.state(&u).map(|state| Node { state, step: config.step_rule.initial })
        })
        .collect::<Result<_>>()?;

    let mut log = Vec::new();
    let mut path_valid = true;
    let mut best_grad = f64::INFINITY;
    let mut since_improvement = 0;
    let mut iteration = 0;
    let mut converged_on_string = false;
    while iteration < config.max_iters {
        let top = top_node(&nodes);
        let top_state = &nodes[top].state;
        log.push(IterRecord {
            iteration,
            energy: top_state.energy.total,
            grad_norm: top_state.grad_norm,
            h1_norm: top_state.h1_norm,
        });
        log::debug!(
            "string {iteration}: top node {top} J = {:.6e} |g| = {:.3e} |u| = {:.4}",
            top_state.energy.total,
            top_state.grad_norm,
            top_state.h1_norm
        );
        if is_stationary(top_state, config.grad_tol) {
            converged_on_string = true;
            break;
        }
        if top_state.grad_norm < 0.99 * best_grad {
            best_grad = top_state.grad_norm;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= config.stall_window {
                break;
            }
        }
        // Nodes past the top that are already below zero only certify
        // J(γ(1)) < 0; letting them descend would drag the path into the
        // concentration region where J is unbounded below.
        let reach = max_displacement(&nodes, &endpoint)?;
        let relaxed = nodes
            .into_iter()
            .enumerate()
            .map(|(i, node)| {
                if i > top && node.state.energy.total < 0.0 {
                    Ok((node.state.u, node.step))
                } else {
                    relax_node(&functional, node, &config.step_rule, reach)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        nodes = reparametrize(&functional, relaxed, &endpoint)?;
        // γ(0) = 0 and γ(1) = e are held fixed, so membership in Γ reduces
        // to J(e) < 0 and no interior node escaping to non-finite values.
        path_valid &= end_energy < 0.0 && nodes.iter().all(|n| n.state.energy.total.is_finite());
        iteration += 1;
    }

    let top = top_node(&nodes);
    let top_state = nodes.swap_remove(top).state;
    let (state, converged, iterations) = if converged_on_string {
        (top_state, true, iteration)
    } else {
        // move to the maximum on the ray through the top node, then refine
        let fib = functional.fibering(&top_state.u)?;
        let ray = fib.maximize()?;
        let start = top_state.u.scale(ray.t);
        let outcome = newton_refine(&functional, &start, config.grad_tol, config.refine_steps, iteration + 1)?;
        log.extend(outcome.log);
        (outcome.state, outcome.converged, iteration + 1 + outcome.iterations)
    };

    let mut report = CriticalPointReport::from_state(instance, state, Kind::Saddle, iterations, converged, log);
    let c = report.energy;
    report.checks.push(Check::new("converged", converged, format!("|g| = {:.3e}", report.grad_norm)));
    let min = report.u.min();
    report.checks.push(Check::new("nonnegative", min >= 0.0, format!("min u = {min:.3e}")));
    report.checks.push(Check::new("positive_level", c > 0.0, format!("c = {c:.9e}")));
    report.checks.push(Check::new(
        "above_alpha_floor",
        c >= constants.alpha_floor,
        format!("c = {c:.9e} >= alpha_floor = {:.9e}", constants.alpha_floor),
    ));
    report.checks.push(Check::new(
        "below_level_bound",
        c < constants.level_bound,
        format!("c = {c:.9e} < level_bound = {:.9e}", constants.level_bound),
    ));
    report.checks.push(Check::new("path_in_gamma", path_valid, format!("J(e) = {end_energy:.6e}")));
    report.checks.push(nehari_check(&functional, &report.u)?);
    Ok(report)
}

fn top_node(nodes: &[Node]) -> usize {
    (0..nodes.len())
        .max_by(|&a, &b| nodes[a].state.energy.total.total_cmp(&nodes[b].state.energy.total))
        .expect("path has interior nodes")
}

/// Half the current node spacing in `H^1`; no node moves farther per sweep.
fn max_displacement(nodes: &[Node], endpoint: &Field) -> Result<f64> {
    let mut len = nodes[0].state.h1_norm;
    for w in nodes.windows(2) {
        len += w[1].state.u.axpy(-1.0, &w[0].state.u)?.h1_norm();
    }
    len += endpoint.axpy(-1.0, &nodes[nodes.len() - 1].state.u)?.h1_norm();
    Ok(0.5 * len / (nodes.len() + 1) as f64)
}

/// One backtracked step `u ← |u - s g|` with Armijo decrease of `J`, with
/// the displacement `s ‖g‖` capped at `reach`. Returns the new point and the
/// step to try next.
fn relax_node(functional: &Functional<'_>, node: Node, rule: &StepRule, reach: f64) -> Result<(Field, f64)> {
    let g2 = node.state.grad_norm.powi(2);
    if g2 == 0.0 {
        return Ok((node.state.u, node.step));
    }
    let mut s = node.step.min(reach / node.state.grad_norm);
    for _ in 0..rule.max_backtracks {
        let cand = node.state.u.axpy(-s, &node.state.gradient)?.abs();
        // overshooting into the t^10 regime can overflow; treat as a rejected step
        let j = functional.evaluate(&cand).map(|e| e.total).unwrap_or(f64::INFINITY);
        if j.is_finite() && j <= node.state.energy.total - rule.armijo * s * g2 {
            return Ok((cand, (s / rule.shrink).min(rule.initial)));
        }
        s *= rule.shrink;
    }
    Ok((node.state.u, s))
}

/// Re-spaces the interior nodes to equal `H^1` arc length along the
/// piecewise-linear path `0, nodes..., endpoint`.
fn reparametrize(functional: &Functional<'_>, nodes: Vec<(Field, f64)>, endpoint: &Field) -> Result<Vec<Node>> {
    let grid = *endpoint.grid();
    let mut points: Vec<Field> = Vec::with_capacity(nodes.len() + 2);
    points.push(Field::zeros(grid));
    let steps: Vec<f64> = nodes.iter().map(|n| n.1).collect();
    points.extend(nodes.into_iter().map(|n| n.0));
    points.push(endpoint.clone());

    let mut arc = vec![0.0];
    for w in points.windows(2) {
        let d = w[1].axpy(-1.0, &w[0])?.h1_norm();
        arc.push(arc.last().expect("nonempty") + d);
    }
    let total = *arc.last().expect("nonempty");
    let m = points.len();
    let mut out = Vec::with_capacity(m - 2);
    let mut seg = 0;
    for (i, &step) in (1..m - 1).zip(&steps) {
        let target = total * i as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && arc[seg + 1] < target {
            seg += 1;
        }
        let len = arc[seg + 1] - arc[seg];
        let theta = if len > 0.0 { (target - arc[seg]) / len } else { 0.0 };
        let u = points[seg].scale(1.0 - theta).axpy(theta, &points[seg + 1])?;
        out.push(Node { state: functional.state(&u)?, step });
    }
    Ok(out)
}

/// `⟨J'(u), u⟩ = ‖u‖² - ∫Kφ|u|⁵ - λ∫f|u|^q ≈ 0`, relative to `‖u‖²`.
pub(crate) fn nehari_check(functional: &Functional<'_>, u: &Field) -> Result<Check> {
    let fib = functional.fibering(u)?;
    let defect = fib.a - fib.b - fib.lambda * fib.c;
    let rel = defect.abs() / fib.a.max(f64::MIN_POSITIVE);
    Ok(Check::new("nehari_identity", rel < 1e-5, format!("|<J'(u),u>| / ‖u‖² = {rel:.3e}")))
}
