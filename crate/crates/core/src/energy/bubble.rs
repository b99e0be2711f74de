//! Truncated Aubin–Talenti bubbles and the level estimates built on them.

use crate::error::{usage, Error, Result};
use crate::field::{gradient_sq_norm, Field, Grid3};
use crate::models::{distance, ProblemInstance};
use crate::quadrature::loglog_slope;

use super::{compute_constants, quadratic_minus_tenth_max, sobolev_constant, Functional};

/// Pre-registered tolerance on fitted asymptotic orders.
pub const SLOPE_TOLERANCE: f64 = 0.15;

/// `v_ε = ψ(|x - x0|) U_ε(x - x0)` with `ψ ≡ 1` on `B_1` and `ψ ≡ 0` outside `B_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    pub epsilon: f64,
    pub x0: [f64; 3],
    pub cutoff_radii: (f64, f64),
}

impl Bubble {
    pub fn new(epsilon: f64, x0: [f64; 3]) -> Self {
        Bubble { epsilon, x0, cutoff_radii: (1.0, 2.0) }
    }

    /// `U_ε(r) = (3ε²)^{1/4} / (ε² + r²)^{1/2}`.
    pub fn profile(&self, r: f64) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        (3.0 * e2).powf(0.25) / (e2 + r * r).sqrt()
    }

    /// Smooth cutoff built from `exp(-1/s)` transitions.
    pub fn cutoff(&self, r: f64) -> f64 {
        let (r1, r2) = self.cutoff_radii;
        if r <= r1 {
            return 1.0;
        }
        if r >= r2 {
            return 0.0;
        }
        let s = (r2 - r) / (r2 - r1);
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let r = distance(x, self.x0);
        self.cutoff(r) * self.profile(r)
    }

    pub fn sample(&self, grid: Grid3) -> Field {
        Field::from_fn(grid, |x| self.value(x))
    }

    /// The untruncated bubble `U_ε`.
    pub fn sample_full(&self, grid: Grid3) -> Field {
        Field::from_fn(grid, |x| self.profile(distance(x, self.x0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleRow {
    pub epsilon: f64,
    /// `|∇v_ε|_2² - S^{3/2}`
    pub grad_excess: f64,
    /// `|v_ε|_2²`
    pub l2_sq: f64,
    /// `∫ [K(x0) - K] |v_ε|^6`
    pub k_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleEstimates {
    pub rows: Vec<BubbleRow>,
    pub slope_grad: f64,
    pub slope_l2: f64,
    /// `None` when `K` is constant and the defect vanishes identically.
    pub slope_k: Option<f64>,
    pub beta: f64,
}

impl BubbleEstimates {
    pub fn grad_ok(&self) -> bool {
        self.slope_grad >= 1.0 - SLOPE_TOLERANCE
    }

    pub fn l2_ok(&self) -> bool {
        self.slope_l2 >= 1.0 - SLOPE_TOLERANCE
    }

    pub fn k_ok(&self) -> bool {
        match self.slope_k {
            Some(s) => s >= self.beta - SLOPE_TOLERANCE,
            None => self.rows.iter().all(|r| r.k_defect == 0.0),
        }
    }

    pub fn passed(&self) -> bool {
        self.grad_ok() && self.l2_ok() && self.k_ok()
    }
}

fn check_sweep(grid: &Grid3, x0: [f64; 3], epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < 2 {
        return usage("need at least two scales");
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return usage("scales must lie in (0,1)");
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return usage("scales must be strictly decreasing");
    }
    let eps_min = *epsilons.last().expect("nonempty");
    if grid.spacing() > eps_min / 4.0 {
        return usage(format!(
            "grid spacing {} does not resolve scale {eps_min} (need h <= {})",
            grid.spacing(),
            eps_min / 4.0
        ));
    }
    let reach = x0.iter().fold(0.0f64, |m, c| m.max(c.abs())) + 2.0;
    if reach > grid.half_width() - grid.spacing() {
        return usage(format!("cutoff ball B_2(x0) does not fit in the box of half width {}", grid.half_width()));
    }
    Ok(())
}

/// Asymptotics of the truncated bubbles as `ε → 0`.
pub fn bubble_estimates(instance: &ProblemInstance, epsilons: &[f64]) -> Result<BubbleEstimates> {
    let grid = *instance.grid();
    let pot = instance.potential();
    check_sweep(&grid, pot.x0(), epsilons)?;
    let s32 = sobolev_constant().powf(1.5);
    let k0 = pot.k_sup();
    let vol = grid.cell_volume();
    let rows: Vec<BubbleRow> = epsilons
        .iter()
        .map(|&eps| {
            let v = Bubble::new(eps, pot.x0()).sample(grid);
            let k_defect =
                pot.samples().values().iter().zip(v.values()).map(|(k, v)| (k0 - k) * v.powi(6)).sum::<f64>() * vol;
            BubbleRow { epsilon: eps, grad_excess: gradient_sq_norm(&v) - s32, l2_sq: v.l2_norm().powi(2), k_defect }
        })
        .collect();
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let col = |f: fn(&BubbleRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let slope_k = if pot.is_constant() { None } else { Some(loglog_slope(&eps, &col(|r| r.k_defect))) };
    Ok(BubbleEstimates {
        slope_grad: loglog_slope(&eps, &col(|r| r.grad_excess)),
        slope_l2: loglog_slope(&eps, &col(|r| r.l2_sq)),
        slope_k,
        beta: pot.beta(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub epsilon: f64,
    /// Maximizer of `t ↦ J(t v_ε)`.
    pub t_max: f64,
    pub max_value: f64,
    /// Closed-form maximum of the concave-free part `g(t)`.
    pub g_max: f64,
    /// `(λ/q) ∫ f |t_g v_ε|^q` at the maximizer `t_g` of `g`.
    pub concave_at_g_max: f64,
}

impl LevelRow {
    /// `max g - concave(t_g) <= max J <= max g`, i.e. the `λ → 0` limit is
    /// approached within the concave-term magnitude.
    pub fn within_concave_band(&self) -> bool {
        let slack = 1e-10 * self.g_max.abs();
        self.max_value <= self.g_max + slack && self.max_value >= self.g_max - self.concave_at_g_max - slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelBoundReport {
    pub rows: Vec<LevelRow>,
    pub level_bound: f64,
    /// Largest scale whose ray maximum falls below the level bound.
    pub achieving_epsilon: Option<f64>,
    /// Fixed bracket `[t_1, t_2]` expected to contain every `t_ε`.
    pub t_bracket: (f64, f64),
}

impl LevelBoundReport {
    pub fn bound_attained(&self) -> bool {
        self.achieving_epsilon.is_some()
    }

    pub fn maximizers_bracketed(&self) -> bool {
        let (lo, hi) = self.t_bracket;
        self.rows.iter().all(|r| r.t_max > lo && r.t_max < hi)
    }

    pub fn min_value(&self) -> f64 {
        self.rows.iter().map(|r| r.max_value).fold(f64::INFINITY, f64::min)
    }
}

/// Maximizes `J(t v_ε)` over `t > 0` for each scale and compares the maxima
/// with the level bound. The bracket for `t_ε` is `[t_0/2, 2 t_0]` around the
/// `ε → 0` limit `t_0 = K(x0)^{-1/8}`.
pub fn level_bound_check(instance: &ProblemInstance, epsilons: &[f64]) -> Result<LevelBoundReport> {
    let grid = *instance.grid();
    let pot = instance.potential();
    check_sweep(&grid, pot.x0(), epsilons)?;
    let constants = compute_constants(instance)?;
    if instance.lambda() >= constants.lambda0 {
        return Err(Error::Precondition(format!(
            "lambda = {} is not below lambda0 = {}",
            instance.lambda(),
            constants.lambda0
        )));
    }
    let functional = Functional::new(instance);
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let v = Bubble::new(eps, pot.x0()).sample(grid);
        let fib = functional.fibering(&v)?;
        let best = fib.maximize().map_err(|e| Error::Numeric(format!("scale {eps}: {e}")))?;
        let (c1, c2) = (0.5 * fib.a, 0.1 * fib.b);
        let t_g = (c1 / (5.0 * c2)).powf(0.125);
        rows.push(LevelRow {
            epsilon: eps,
            t_max: best.t,
            max_value: best.value,
            g_max: quadratic_minus_tenth_max(c1, c2),
            concave_at_g_max: fib.lambda * fib.c * t_g.powf(fib.q) / fib.q,
        });
    }
    let t0 = pot.k_sup().powf(-0.125);
    let achieving_epsilon = rows.iter().find(|r| r.max_value < constants.level_bound).map(|r| r.epsilon);
    Ok(LevelBoundReport {
        rows,
        level_bound: constants.level_bound,
        achieving_epsilon,
        t_bracket: (0.5 * t0, 2.0 * t0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_exact_on_inner_and_outer_regions() {
        let b = Bubble::new(0.3, [0.0; 3]);
        assert_eq!(b.cutoff(0.99), 1.0);
        assert_eq!(b.cutoff(1.0), 1.0);
        assert_eq!(b.cutoff(2.0), 0.0);
        assert!((b.cutoff(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(b.value([0.5, 0.0, 0.0]), b.profile(0.5));
    }

    #[test]
    fn sweep_preconditions() {
        let g = Grid3::new(3.0, 24).unwrap();
        assert!(check_sweep(&g, [0.0; 3], &[0.4, 0.2, 0.1]).is_err());
        let g = Grid3::new(2.5, 100).unwrap();
        assert!(check_sweep(&g, [0.0; 3], &[0.4, 0.2]).is_ok());
        assert!(check_sweep(&g, [0.0; 3], &[0.2, 0.4]).is_err());
        assert!(check_sweep(&g, [0.0; 3], &[1.2, 0.4]).is_err());
    }
}
