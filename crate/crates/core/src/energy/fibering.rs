//! One-dimensional maximization along rays `t ↦ J(t u)`.

use crate::error::{Error, Result};

/// `J(t u) = a t²/2 - b t^10/10 - λ c t^q/q`, exact because each term of `J`
/// is homogeneous in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fibering {
    /// `‖u‖²`
    pub a: f64,
    /// `∫ K φ_u |u|^5`
    pub b: f64,
    /// `∫ f |u|^q`
    pub c: f64,
    pub lambda: f64,
    pub q: f64,
}

/// Location and value of a one-dimensional maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayMax {
    pub t: f64,
    pub value: f64,
}

impl Fibering {
    pub fn value(&self, t: f64) -> f64 {
        0.5 * self.a * t * t - 0.1 * self.b * t.powi(10) - self.lambda * self.c * t.powf(self.q) / self.q
    }

    /// The concave-free part `g(t) = a t²/2 - b t^10/10`.
    pub fn without_concave(&self) -> Fibering {
        Fibering { c: 0.0, ..*self }
    }

    pub fn maximize(&self) -> Result<RayMax> {
        maximize_on_ray(|t| self.value(t))
    }
}

/// `max_{t>=0} (c1 t² - c2 t^10) = 4 c1^{5/4} / (5 (5 c2)^{1/4})`.
pub fn quadratic_minus_tenth_max(c1: f64, c2: f64) -> f64 {
    4.0 * c1.powf(1.25) / (5.0 * (5.0 * c2).powf(0.25))
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> RayMax {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        RayMax { t: x1, value: f1 }
    } else {
        RayMax { t: x2, value: f2 }
    }
}

/// Brackets the maximum of `f` over `t > 0` by scanning `t = 2^k`, then
/// refines it by golden section.
pub fn maximize_on_ray(f: impl Fn(f64) -> f64) -> Result<RayMax> {
    let (lo, hi) = bracket_ray_max(&f)?;
    Ok(golden_section_max(f, lo, hi, 1e-13))
}

/// `[2^{k-1}, 2^{k+1}]` around the largest sample on the doubling ladder.
pub fn bracket_ray_max(f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let ladder: Vec<(f64, f64)> = (-30..=30).map(|k| 2f64.powi(k)).map(|t| (t, f(t))).collect();
    // -inf is an honest value far out on the ray; NaN and +inf are not
    if let Some(&(t, v)) = ladder.iter().find(|(_, v)| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Numeric(format!("ray function not finite at t = {t}: {v}")));
    }
    let best = (0..ladder.len()).max_by(|&i, &j| ladder[i].1.total_cmp(&ladder[j].1)).expect("nonempty ladder");
    if best == 0 || best == ladder.len() - 1 {
        return Err(Error::Numeric(format!(
            "no interior maximum on t in [2^-30, 2^30]; largest sample at t = {}",
            ladder[best].0
        )));
    }
    Ok((ladder[best - 1].0, ladder[best + 1].0))
}
