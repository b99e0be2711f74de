//! The reduced functional
//!
//! ```text
//! J(u) = ½‖u‖² - (1/10) ∫ K φ_u |u|^5 - (λ/q) ∫ f |u|^q
//! ```
//!
//! with its `H^1` gradient, the closed-form constants of the existence theory
//! and the bubble-based level estimates.

mod bubble;
mod fibering;

use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{h1_inner, random_smooth_field, Field};
use crate::models::{check_q, ProblemInstance};
use crate::nonlocal::PoissonSolver;
use crate::quadrature::integrate_gl;

pub use bubble::{
    bubble_estimates, level_bound_check, Bubble, BubbleEstimates, BubbleRow, LevelBoundReport, LevelRow,
    SLOPE_TOLERANCE,
};
pub use fibering::{bracket_ray_max, golden_section_max, maximize_on_ray, quadratic_minus_tenth_max, Fibering, RayMax};

/// Relative size of the smoothing in `|u|^{q-2} u ≈ (u² + ε²)^{(q-2)/2} u`,
/// with `ε = REG_RELATIVE · ‖u‖_∞`.
pub const REG_RELATIVE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½‖u‖²`
    pub quadratic: f64,
    /// `(1/10) ∫ K φ_u |u|^5`
    pub nonlocal: f64,
    /// `(λ/q) ∫ f |u|^q`
    pub concave: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(quadratic: f64, nonlocal: f64, concave: f64) -> Self {
        EnergyBreakdown { quadratic, nonlocal, concave, total: quadratic - nonlocal - concave }
    }
}

/// Everything known about `J` at one point after a single Poisson solve.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Field,
    pub phi: Field,
    pub energy: EnergyBreakdown,
    /// `H^1` Riesz representative of `J'(u)`.
    pub gradient: Field,
    pub grad_norm: f64,
    pub h1_norm: f64,
}

/// `J` bound to an instance, with the instance's Poisson solver.
#[derive(Debug, Clone)]
pub struct Functional<'a> {
    instance: &'a ProblemInstance,
    poisson: Arc<PoissonSolver>,
}

impl<'a> Functional<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        Functional { instance, poisson: PoissonSolver::shared(*instance.grid(), false) }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn poisson(&self) -> &PoissonSolver {
        &self.poisson
    }

    /// `(1/q) ∫ f [(u² + ε²)^{q/2} - ε^q]` and the pointwise `σ_q(u)`.
    fn concave_parts(&self, u: &Field, with_sigma: bool) -> (f64, Option<Vec<f64>>) {
        let q = self.instance.q();
        let eps = REG_RELATIVE * u.max_abs();
        if eps == 0.0 {
            return (0.0, with_sigma.then(|| vec![0.0; u.values().len()]));
        }
        let eps2 = eps * eps;
        let eps_q = eps.powf(q);
        let f = self.instance.weight().samples().values();
        let mut sum = 0.0;
        let mut sigma = with_sigma.then(|| Vec::with_capacity(f.len()));
        for (&v, &w) in u.values().iter().zip(f) {
            let s = v * v + eps2;
            sum += w * (s.powf(0.5 * q) - eps_q);
            if let Some(sig) = sigma.as_mut() {
                sig.push(s.powf(0.5 * q - 1.0) * v);
            }
        }
        (sum * u.grid().cell_volume() / q, sigma)
    }

    /// Regularized `∫ f |u|^q`; exactly `q`-homogeneous under `u ↦ t u`.
    pub fn concave_integral(&self, u: &Field) -> f64 {
        self.instance.q() * self.concave_parts(u, false).0
    }

    pub fn evaluate(&self, u: &Field) -> Result<EnergyBreakdown> {
        Ok(self.evaluate_with_potential(u)?.0)
    }

    fn evaluate_with_potential(&self, u: &Field) -> Result<(EnergyBreakdown, Field)> {
        self.instance.grid().ensure_same(u.grid())?;
        let phi = self.poisson.potential(self.instance, u)?;
        let nonlocal = crate::nonlocal::nonlocal_energy(self.instance, u, &phi)?;
        let h1_sq = u.h1_norm().powi(2);
        let concave = self.instance.lambda() * self.concave_parts(u, false).0;
        Ok((EnergyBreakdown::new(0.5 * h1_sq, 0.1 * nonlocal, concave), phi))
    }

    /// Energy, potential and `H^1` gradient
    /// `g = u - (-Δ+1)^{-1} [K φ_u |u|^3 u + λ f σ_q(u)]`.
    pub fn state(&self, u: &Field) -> Result<State> {
        self.instance.grid().ensure_same(u.grid())?;
        let grid = *u.grid();
        let phi = self.poisson.potential(self.instance, u)?;
        let k = self.instance.potential().samples().values();
        let f = self.instance.weight().samples().values();
        let lambda = self.instance.lambda();
        let (concave, sigma) = self.concave_parts(u, true);
        let sigma = sigma.expect("requested");

        let mut nonlocal = 0.0;
        let mut forcing = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let v = u.values()[i];
            let a3 = v.abs().powi(3);
            nonlocal += k[i] * phi.values()[i] * a3 * v.abs() * v.abs();
            forcing.push(k[i] * phi.values()[i] * a3 * v + lambda * f[i] * sigma[i]);
        }
        nonlocal *= grid.cell_volume();

        let h1_norm = u.h1_norm();
        let smoothed = Field::from_values(grid, forcing)?.solve_helmholtz();
        let gradient = u.axpy(-1.0, &smoothed)?;
        let grad_norm = gradient.h1_norm();
        let energy = EnergyBreakdown::new(0.5 * h1_norm * h1_norm, 0.1 * nonlocal, lambda * concave);
        Ok(State { u: u.clone(), phi, energy, gradient, grad_norm, h1_norm })
    }

    pub fn gradient(&self, u: &Field) -> Result<Field> {
        Ok(self.state(u)?.gradient)
    }

    /// `⟨J'(u), v⟩ = (g, v)_{H^1}`.
    pub fn derivative(&self, u: &Field, v: &Field) -> Result<f64> {
        h1_inner(&self.gradient(u)?, v)
    }

    /// Coefficients of `t ↦ J(t u)`.
    pub fn fibering(&self, u: &Field) -> Result<Fibering> {
        let phi = self.poisson.potential(self.instance, u)?;
        Ok(Fibering {
            a: u.h1_norm().powi(2),
            b: crate::nonlocal::nonlocal_energy(self.instance, u, &phi)?,
            c: self.concave_integral(u),
            lambda: self.instance.lambda(),
            q: self.instance.q(),
        })
    }
}

/// `J(u)` term by term.
pub fn evaluate_j(instance: &ProblemInstance, u: &Field) -> Result<EnergyBreakdown> {
    Functional::new(instance).evaluate(u)
}

/// `H^1` gradient of `J` at `u`.
pub fn h1_gradient(instance: &ProblemInstance, u: &Field) -> Result<Field> {
    Functional::new(instance).gradient(u)
}

/// Radial quadrature of `(|∇U_ε|_2², |U_ε|_6^6)` for the bubble
/// `U_ε(r) = (3ε²)^{1/4} (ε² + r²)^{-1/2}`, using `r = ε tan θ`.
pub fn bubble_radial_norms(epsilon: f64) -> (f64, f64) {
    let amp = (3.0 * epsilon * epsilon).powf(0.25);
    let four_pi = 4.0 * std::f64::consts::PI;
    let grad = integrate_gl(
        |th: f64| {
            let (s, c) = th.sin_cos();
            // U' = -amp sinθ cos²θ / ε², r² dr = ε³ tan²θ sec²θ dθ
            let du = amp * s * c * c / (epsilon * epsilon);
            du * du * epsilon.powi(3) * (s * s) / (c * c * c * c)
        },
        0.0,
        FRAC_PI_2,
        64,
        12,
    );
    let l6 = integrate_gl(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let u = amp * c / epsilon;
            u.powi(6) * epsilon.powi(3) * (s * s) / (c * c * c * c)
        },
        0.0,
        FRAC_PI_2,
        64,
        12,
    );
    (four_pi * grad, four_pi * l6)
}

/// `|∇U|_2² / |U|_6²` at scale `epsilon`.
pub fn sobolev_quotient(epsilon: f64) -> f64 {
    let (g, l6) = bubble_radial_norms(epsilon);
    g / l6.powf(1.0 / 3.0)
}

/// The best Sobolev constant `S`, from the bubble Rayleigh quotient.
pub fn sobolev_constant() -> f64 {
    static S: OnceLock<f64> = OnceLock::new();
    *S.get_or_init(|| {
        let s1 = sobolev_quotient(1.0);
        let s2 = sobolev_quotient(2.0);
        assert!((s1 - s2).abs() <= 1e-10 * s1, "bubble quotient is not scale invariant: {s1} vs {s2}");
        s1
    })
}

/// Closed-form constants of the existence theory for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsReport {
    pub s: f64,
    pub rho: f64,
    pub lambda0: f64,
    /// Lower bound for `J` on the sphere `‖u‖ = ρ`; positive iff `λ < λ₀`.
    pub alpha_floor: f64,
    pub c0: f64,
    /// `(2/5)|K|_∞^{-1/2} S^{3/2} - C₀ λ^{2/(2-q)}`
    pub level_bound: f64,
    pub k_sup: f64,
    pub norm_f: f64,
    pub q: f64,
    pub lambda: f64,
}

impl ConstantsReport {
    /// Constants from the scalar data `|K|_∞`, `|f|_{2/(2-q)}`, `q`, `λ`.
    pub fn from_data(k_sup: f64, norm_f: f64, q: f64, lambda: f64) -> Result<Self> {
        check_q(q)?;
        let s = sobolev_constant();
        let s6 = s.powi(6);
        let k2 = k_sup * k_sup;
        let rho = (5.0 * s6 * (2.0 - q) / k2).powf(0.125);
        let inner = (5.0 * s6 * (2.0 - q) / (k2 * (10.0 - q))).powf((2.0 - q) / 8.0);
        let lambda0 = 4.0 * q / ((10.0 - q) * norm_f) * inner;
        let alpha_floor = rho.powf(q) * (4.0 / (10.0 - q) * inner - lambda * norm_f / q);
        let c0 = 2.0 * (2.0 - q) / (5.0 * q) * ((10.0 - q) * norm_f / 8.0).powf(2.0 / (2.0 - q));
        let level_bound = 0.4 * k_sup.powf(-0.5) * s.powf(1.5) - c0 * lambda.powf(2.0 / (2.0 - q));
        Ok(ConstantsReport { s, rho, lambda0, alpha_floor, c0, level_bound, k_sup, norm_f, q, lambda })
    }

    /// The limit of `level_bound` as `λ → 0`.
    pub fn compactness_threshold(&self) -> f64 {
        0.4 * self.k_sup.powf(-0.5) * self.s.powf(1.5)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::from_data(self.k_sup, self.norm_f, self.q, lambda)
    }
}

pub fn compute_constants(instance: &ProblemInstance) -> Result<ConstantsReport> {
    ConstantsReport::from_data(
        instance.potential().k_sup(),
        instance.weight().norm_f(),
        instance.q(),
        instance.lambda(),
    )
}

/// Outcome of sampling `J` on the sphere `‖u‖ = ρ`.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub samples: usize,
    pub min_energy: f64,
    pub alpha_floor: f64,
    pub violations: usize,
    /// First sample that fell below the floor, if any.
    pub witness: Option<Field>,
}

impl GeometryReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `trials` random smooth fields rescaled to `‖u‖ = ρ` and checks
/// `J(u) >= alpha_floor (1 - 1e-6)`.
pub fn mountain_pass_geometry_check(instance: &ProblemInstance, trials: usize, seed: u64) -> Result<GeometryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Field> = (0..trials).map(|_| random_smooth_field(*instance.grid(), &mut rng, false)).collect();
    geometry_check_fields(instance, fields)
}

/// As [`mountain_pass_geometry_check`] on caller-supplied directions.
pub fn geometry_check_fields(instance: &ProblemInstance, directions: Vec<Field>) -> Result<GeometryReport> {
    let constants = compute_constants(instance)?;
    let functional = Functional::new(instance);
    let floor = constants.alpha_floor * (1.0 - 1e-6);
    let mut report = GeometryReport {
        samples: 0,
        min_energy: f64::INFINITY,
        alpha_floor: constants.alpha_floor,
        violations: 0,
        witness: None,
    };
    for dir in directions {
        let norm = dir.h1_norm();
        if norm == 0.0 {
            continue;
        }
        let u = dir.scale(constants.rho / norm);
        let j = functional.evaluate(&u)?.total;
        report.samples += 1;
        report.min_energy = report.min_energy.min(j);
        if j < floor {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some(u);
            }
        }
    }
    Ok(report)
}

/// `J(u) - (1/10)⟨J'(u), u⟩` minus its coercive lower bound
/// `(2/5)‖u‖² - λ (10-q)/(10q) |f| ‖u‖^q`; nonnegative up to round-off.
pub fn coercivity_gap(instance: &ProblemInstance, u: &Field) -> Result<f64> {
    let functional = Functional::new(instance);
    let state = functional.state(u)?;
    let pairing = h1_inner(&state.gradient, u)?;
    let q = instance.q();
    let norm = state.h1_norm;
    let floor =
        0.4 * norm * norm - instance.lambda() * (10.0 - q) / (10.0 * q) * instance.weight().norm_f() * norm.powf(q);
    Ok(state.energy.total - 0.1 * pairing - floor)
}
