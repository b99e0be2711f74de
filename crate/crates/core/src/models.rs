//! Coefficient fields `K` and `f` and the problem parameter bundle.

use crate::error::{Error, Result};
use crate::field::{Field, Grid3};

/// Names accepted by [`builtin_instance`].
pub const BUILTIN_NAMES: [&str; 3] = ["const_K_gaussian_f", "bump_K_gaussian_f", "const_K_compact_f"];

/// The coupling coefficient `K >= 0` together with its local Hölder data at
/// the maximum point: `|K(x) - K(x0)| <= C |x - x0|^beta` for `|x - x0| < delta`.
#[derive(Debug, Clone)]
pub struct Potential {
    samples: Field,
    k_sup: f64,
    x0: [f64; 3],
    beta: f64,
    holder_c: f64,
    holder_delta: f64,
}

impl Potential {
    /// Validates sampled `K` against its declared maximum point and Hölder data.
    pub fn new(samples: Field, x0: [f64; 3], beta: f64, holder_c: f64, holder_delta: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if !(1.0..3.0).contains(&beta) {
            return bad(format!("Hölder exponent must lie in [1,3), got {beta}"));
        }
        if !(holder_c > 0.0 && holder_delta > 0.0) {
            return bad("Hölder constant and radius must be positive".into());
        }
        if samples.min() < 0.0 {
            return bad(format!("K must be nonnegative, found {:.3e}", samples.min()));
        }
        let k_sup = samples.max();
        if !(k_sup > 0.0) {
            return bad("K vanishes identically".into());
        }
        let grid = *samples.grid();
        let center = nearest_index(&grid, x0);
        let k0 = samples.values()[center];
        if k_sup - k0 > 1e-12 * k_sup {
            return bad(format!("max K = {k_sup} is not attained at x0 (K(x0) = {k0})"));
        }
        for (idx, &k) in samples.values().iter().enumerate() {
            let r = distance(grid.point(idx), x0);
            if r < holder_delta && (k - k0).abs() > holder_c * r.powf(beta) + 1e-14 * k_sup {
                return bad(format!(
                    "Hölder bound violated at r = {r:.4}: |K - K(x0)| = {:.3e} > {:.3e}",
                    (k - k0).abs(),
                    holder_c * r.powf(beta)
                ));
            }
        }
        Ok(Potential { samples, k_sup, x0, beta, holder_c, holder_delta })
    }

    pub fn samples(&self) -> &Field {
        &self.samples
    }

    /// `|K|_∞`.
    pub fn k_sup(&self) -> f64 {
        self.k_sup
    }

    pub fn x0(&self) -> [f64; 3] {
        self.x0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn holder_c(&self) -> f64 {
        self.holder_c
    }

    pub fn holder_delta(&self) -> f64 {
        self.holder_delta
    }

    /// True when `K` is constant on the grid.
    pub fn is_constant(&self) -> bool {
        self.samples.min() == self.k_sup
    }
}

/// The weight `f >= 0` of the concave term, with exponent `q` and the discrete
/// norm `|f|_{2/(2-q)}`.
#[derive(Debug, Clone)]
pub struct Weight {
    samples: Field,
    q: f64,
    norm_f: f64,
}

impl Weight {
    pub fn new(samples: Field, q: f64) -> Result<Self> {
        check_q(q)?;
        if samples.min() < 0.0 {
            return Err(Error::InvalidInstance(format!("f must be nonnegative, found {:.3e}", samples.min())));
        }
        if samples.max() <= 0.0 {
            return Err(Error::InvalidInstance("f vanishes identically".into()));
        }
        let norm_f = samples.lp_norm(2.0 / (2.0 - q));
        if !(norm_f.is_finite() && norm_f > 0.0) {
            return Err(Error::InvalidInstance(format!("|f| is not a positive finite number: {norm_f}")));
        }
        Ok(Weight { samples, q, norm_f })
    }

    pub fn samples(&self) -> &Field {
        &self.samples
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `|f|_{2/(2-q)}` on the grid.
    pub fn norm_f(&self) -> f64 {
        self.norm_f
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    name: String,
    potential: Potential,
    weight: Weight,
    lambda: f64,
}

impl ProblemInstance {
    pub fn new(name: impl Into<String>, potential: Potential, weight: Weight, lambda: f64) -> Result<Self> {
        potential.samples.grid().ensure_same(weight.samples.grid())?;
        check_lambda(lambda)?;
        Ok(ProblemInstance { name: name.into(), potential, weight, lambda })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q(&self) -> f64 {
        self.weight.q
    }

    pub fn grid(&self) -> &Grid3 {
        self.potential.samples.grid()
    }

    /// Same coefficients with a different `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(ProblemInstance { lambda, ..self.clone() })
    }
}

/// Shape of `K` for instances built from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `K ≡ value`.
    Constant { value: f64 },
    /// `K(x) = amplitude / (1 + |x - center|^2 / width^2)`.
    Lorentzian { amplitude: f64, width: f64, center: [f64; 3] },
}

/// Shape of `f` for instances built from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// `f(x) = amplitude · exp(-|x - center|^2 / width^2)`.
    Gaussian { amplitude: f64, width: f64, center: [f64; 3] },
    /// `f(x) = amplitude · exp(1 - 1/(1 - |x - center|^2/radius^2))` inside the ball, 0 outside.
    CompactBump { amplitude: f64, radius: f64, center: [f64; 3] },
}

impl PotentialSpec {
    pub fn realize(&self, grid: Grid3) -> Result<Potential> {
        match *self {
            PotentialSpec::Constant { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::InvalidInstance(format!("constant K must be positive, got {value}")));
                }
                // the Hölder condition is vacuous; C is a placeholder
                let diameter = 2.0 * 3f64.sqrt() * grid.half_width();
                Potential::new(Field::constant(grid, value), [0.0; 3], 1.0, f64::EPSILON, diameter)
            }
            PotentialSpec::Lorentzian { amplitude, width, center } => {
                if !(amplitude > 0.0 && width > 0.0) {
                    return Err(Error::InvalidInstance("Lorentzian K needs positive amplitude and width".into()));
                }
                let c = snap_to_grid(&grid, center);
                let k = Field::from_fn(grid, |x| amplitude / (1.0 + distance(x, c).powi(2) / (width * width)));
                Potential::new(k, c, 2.0, amplitude / (width * width), width)
            }
        }
    }
}

impl WeightSpec {
    pub fn realize(&self, grid: Grid3, q: f64) -> Result<Weight> {
        let f = match *self {
            WeightSpec::Gaussian { amplitude, width, center } => {
                if !(amplitude > 0.0 && width > 0.0) {
                    return Err(Error::InvalidInstance("Gaussian f needs positive amplitude and width".into()));
                }
                Field::from_fn(grid, |x| amplitude * (-distance(x, center).powi(2) / (width * width)).exp())
            }
            WeightSpec::CompactBump { amplitude, radius, center } => {
                if !(amplitude > 0.0 && radius > 0.0) {
                    return Err(Error::InvalidInstance("compact f needs positive amplitude and radius".into()));
                }
                Field::from_fn(grid, |x| {
                    let s = distance(x, center).powi(2) / (radius * radius);
                    if s < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - s)).exp()
                    } else {
                        0.0
                    }
                })
            }
        };
        Weight::new(f, q)
    }
}

/// Specs behind each builtin instance name.
pub fn builtin_specs(name: &str) -> Result<(PotentialSpec, WeightSpec)> {
    let gaussian = WeightSpec::Gaussian { amplitude: 1.0, width: 1.0, center: [0.0; 3] };
    match name {
        "const_K_gaussian_f" => Ok((PotentialSpec::Constant { value: 1.0 }, gaussian)),
        "bump_K_gaussian_f" => {
            Ok((PotentialSpec::Lorentzian { amplitude: 1.0, width: 1.0, center: [0.0; 3] }, gaussian))
        }
        "const_K_compact_f" => Ok((
            PotentialSpec::Constant { value: 1.0 },
            WeightSpec::CompactBump { amplitude: 1.0, radius: 1.0, center: [0.0; 3] },
        )),
        other => Err(Error::InvalidInstance(format!(
            "unknown instance `{other}` (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// One of the predefined `(K, f)` pairs on `grid`.
pub fn builtin_instance(name: &str, grid: Grid3, q: f64, lambda: f64) -> Result<ProblemInstance> {
    let (k, f) = builtin_specs(name)?;
    check_q(q)?;
    check_lambda(lambda)?;
    ProblemInstance::new(name, k.realize(grid)?, f.realize(grid, q)?, lambda)
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!("q must lie in (1,2), got {q}")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!("lambda must be positive, got {lambda}")))
    }
}

/// Euclidean distance between two points.
pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn nearest_index(grid: &Grid3, x: [f64; 3]) -> usize {
    let h = grid.spacing();
    let n = grid.n() as i64;
    let ix = x.map(|c| (((c + grid.half_width()) / h).round() as i64).clamp(0, n - 1) as usize);
    grid.index(ix[0], ix[1], ix[2])
}

fn snap_to_grid(grid: &Grid3, x: [f64; 3]) -> [f64; 3] {
    grid.point(nearest_index(grid, x))
}
