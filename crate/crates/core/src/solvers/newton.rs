//! Local refinement of a critical point by inexact Newton steps.
//!
//! Each step solves `J''(u) δ = -g` by GMRES with finite-difference
//! Hessian-vector products and accepts the step only if `‖g‖²` decreases.
//! This is a descent method for `‖∇J‖²` that, unlike plain minimization of
//! `J`, converges to saddles as well as to minima.

use crate::energy::{Functional, State};
use crate::error::{Error, Result};
use crate::field::Field;

use super::{is_stationary, IterRecord};

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Unrestarted GMRES with modified Gram-Schmidt and Givens rotations,
/// started from zero.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let beta = dot(b, b).sqrt();
    if beta == 0.0 {
        return Ok(GmresOutcome { x: vec![0.0; n], relative_residual: 0.0, iterations: 0 });
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    let mut hess: Vec<Vec<f64>> = Vec::new(); // column j has j+2 entries
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut rhs = vec![beta];
    let mut resid = beta;
    let mut k = 0;
    while k < max_iter {
        let mut w = apply(&basis[k])?;
        let mut col = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            w.iter_mut().zip(v).for_each(|(a, b)| *a -= hij * b);
        }
        let wn = dot(&w, &w).sqrt();
        col[k + 1] = wn;
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[k].hypot(col[k + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (col[k] / r, col[k + 1] / r) };
        col[k] = r;
        col[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        rhs.push(-s * rhs[k]);
        rhs[k] *= c;
        hess.push(col);
        resid = rhs[k + 1].abs();
        k += 1;
        if resid <= rel_tol * beta || wn <= 1e-14 * beta {
            break;
        }
        basis.push(w.iter().map(|v| v / wn).collect());
    }
    // back substitution on the k×k triangle
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| hess[j][i] * y[j]).sum();
        y[i] = (rhs[i] - s) / hess[i][i];
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        x.iter_mut().zip(v).for_each(|(a, b)| *a += yi * b);
    }
    Ok(GmresOutcome { x, relative_residual: resid / beta, iterations: k })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub state: State,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterRecord>,
}

/// Newton iteration from `start` until `‖g‖ <= grad_tol · max(1, ‖u‖)`.
/// Iterates are not projected onto `u >= 0`: the discrete critical point may
/// carry small negative values where the grid under-resolves it, and `|u|`
/// would keep the iteration away from it. Iteration numbers in the log start
/// at `first_iteration`.
pub fn newton_refine(
    functional: &Functional<'_>,
    start: &Field,
    grad_tol: f64,
    max_steps: usize,
    first_iteration: usize,
) -> Result<NewtonOutcome> {
    let mut state = functional.state(start)?;
    let mut log = Vec::new();
    let mut converged = false;
    let mut steps = 0;
    while steps <= max_steps {
        log.push(IterRecord {
            iteration: first_iteration + steps,
            energy: state.energy.total,
            grad_norm: state.grad_norm,
            h1_norm: state.h1_norm,
        });
        if is_stationary(&state, grad_tol) {
            converged = true;
            break;
        }
        if steps == max_steps {
            break;
        }
        let grid = *state.u.grid();
        let u = state.u.values().to_vec();
        let scale = 1.0 + state.u.max_abs();
        let apply = |v: &[f64]| -> Result<Vec<f64>> {
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if vmax == 0.0 {
                return Ok(vec![0.0; v.len()]);
            }
            let tau = 1e-5 * scale / vmax;
            let shifted = |sign: f64| -> Result<Field> {
                Field::from_values(grid, u.iter().zip(v).map(|(a, b)| a + sign * tau * b).collect())
            };
            let gp = functional.gradient(&shifted(1.0)?)?;
            let gm = functional.gradient(&shifted(-1.0)?)?;
            Ok(gp.values().iter().zip(gm.values()).map(|(p, m)| (p - m) / (2.0 * tau)).collect())
        };
        let rhs: Vec<f64> = state.gradient.values().iter().map(|g| -g).collect();
        let step = gmres(apply, &rhs, 1e-4, 60)?;
        let delta = Field::from_values(grid, step.x)?;
        log::debug!(
            "newton {steps}: |g| = {:.3e}, gmres {} its, rel res {:.1e}",
            state.grad_norm,
            step.iterations,
            step.relative_residual
        );

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..20 {
            let cand = functional.state(&state.u.axpy(alpha, &delta)?)?;
            if cand.grad_norm.powi(2) <= (1.0 - 1e-4 * alpha) * state.grad_norm.powi(2) {
                accepted = Some(cand);
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => state = next,
            None => {
                log::warn!("newton line search failed at |g| = {:.3e}", state.grad_norm);
                break;
            }
        }
        steps += 1;
    }
    if !state.grad_norm.is_finite() {
        return Err(Error::Numeric("gradient norm became non-finite".into()));
    }
    Ok(NewtonOutcome { state, iterations: steps, converged, log })
}
