//! Scalar fields sampled on a truncated cube `[-L, L)^3`.
//!
//! The cube is treated as periodic for spectral differentiation. Integrals are
//! the Riemann sum `h^3 * sum(values)`, which is spectrally accurate for the
//! smooth decaying fields the solvers work with.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{usage, Error, Result};
use crate::fft::{self, signed_index};

/// Fields whose boundary values exceed this fraction of their maximum are
/// flagged as leaking through the truncation.
pub const LEAKAGE_THRESHOLD: f64 = 1e-8;

/// Uniform cubic grid on `[-L, L)^3` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    half_width: f64,
    n: usize,
}

impl Grid3 {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return usage(format!("half width must be positive and finite, got {half_width}"));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return usage(format!("points per axis must be even and at least 8, got {n}"));
        }
        Ok(Grid3 { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Total number of samples, `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Position of the flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.coord(idx / (n * n)), self.coord((idx / n) % n), self.coord(idx % n)]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Angular wavenumber of index `i`; the Nyquist mode is negative.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        PI / self.half_width * signed_index(i, self.n) as f64
    }

    /// Per-axis wavenumber array in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Wavenumber used for first derivatives. The Nyquist mode has no real
    /// odd derivative, so it is zeroed to keep derivatives of real fields real.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    pub fn ensure_same(&self, other: &Grid3) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(L={}, N={}) vs (L={}, N={})",
                self.half_width, self.n, other.half_width, other.n
            )))
        }
    }
}

/// Real samples of a scalar function on a [`Grid3`], row-major `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid3,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid3) -> Self {
        Field { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid3, c: f64) -> Self {
        Field { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return usage(format!("expected {} samples, got {}", grid.len(), values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return usage(format!("non-finite sample at index {pos}"));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Field { grid, values }
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_raw(grid: Grid3, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::from_raw(self.grid, values))
    }

    pub fn scale(&self, t: f64) -> Field {
        self.map(|v| t * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn abs(&self) -> Field {
        self.map(f64::abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest boundary-face magnitude relative to the field maximum
    /// (0 for the zero field).
    pub fn boundary_leakage(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let n = self.grid.n;
        let edge = |i: usize| i == 0 || i == n - 1;
        let mut face = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let full_row = edge(i) || edge(j);
                let row = &self.values[self.grid.index(i, j, 0)..][..n];
                if full_row {
                    face = row.iter().fold(face, |m, v| m.max(v.abs()));
                } else {
                    face = face.max(row[0].abs()).max(row[n - 1].abs());
                }
            }
        }
        face / max
    }

    /// Warns about boundary leakage, or fails when `strict` is set.
    pub fn check_leakage(&self, what: &str, strict: bool) -> Result<()> {
        let ratio = self.boundary_leakage();
        if ratio > LEAKAGE_THRESHOLD {
            if strict {
                return Err(Error::Leakage { what: what.to_string(), ratio, threshold: LEAKAGE_THRESHOLD });
            }
            log::warn!("boundary leakage {ratio:.3e} in {what} exceeds {LEAKAGE_THRESHOLD:.0e}");
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Spectrum {
        let plan = fft::plan(self.grid.n, self.grid.n);
        Spectrum { grid: self.grid, data: plan.forward(&self.values) }
    }

    /// `∫ u v dx`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `(∫ |u|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).map(f64::sqrt).unwrap_or(0.0)
    }

    /// `(-Δ + 1)^{-1} u`.
    pub fn solve_helmholtz(&self) -> Field {
        self.spectrum().apply_symbol(|k2| 1.0 / (1.0 + k2)).into_field()
    }

    /// `(-Δ + 1) u`.
    pub fn helmholtz(&self) -> Field {
        self.spectrum().apply_symbol(|k2| 1.0 + k2).into_field()
    }

    /// `-Δ u`.
    pub fn neg_laplacian(&self) -> Field {
        self.spectrum().apply_symbol(|k2| k2).into_field()
    }

    pub fn h1_norm(&self) -> f64 {
        let s = self.spectrum();
        s.inner_with_symbol(&s, |k2| 1.0 + k2).max(0.0).sqrt()
    }
}

/// `∫ u dx` as the Riemann sum `h^3 Σ u`.
pub fn integrate(u: &Field) -> f64 {
    u.values.iter().sum::<f64>() * u.grid.cell_volume()
}

/// `∫ |∇u|^2 dx` via Parseval.
pub fn gradient_sq_norm(u: &Field) -> f64 {
    let s = u.spectrum();
    s.inner_with_symbol(&s, |k2| k2).max(0.0)
}

/// The `H^1` inner product `∫ ∇u·∇v + u v dx`.
pub fn h1_inner(u: &Field, v: &Field) -> Result<f64> {
    u.grid.ensure_same(&v.grid)?;
    Ok(u.spectrum().inner_with_symbol(&v.spectrum(), |k2| 1.0 + k2))
}

/// Norms of a field; `lq_weighted` is `∫ f |u|^q` for the supplied weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub l6: f64,
    pub lq_weighted: f64,
    pub h1: f64,
    pub d12: f64,
}

pub fn norm_report(u: &Field, f: &Field, q: f64) -> Result<NormReport> {
    u.grid.ensure_same(&f.grid)?;
    let s = u.spectrum();
    let d12_sq = s.inner_with_symbol(&s, |k2| k2).max(0.0);
    let l2_sq = u.dot(u)?;
    let lq: f64 = u.values.iter().zip(&f.values).map(|(v, w)| w * v.abs().powf(q)).sum::<f64>() * u.grid.cell_volume();
    Ok(NormReport {
        l2: l2_sq.sqrt(),
        l6: u.lp_norm(6.0),
        lq_weighted: lq,
        h1: (d12_sq + l2_sq).sqrt(),
        d12: d12_sq.sqrt(),
    })
}

/// Half-complex spectrum of a field (`N × N × (N/2+1)`, unnormalized).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid3,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Visits every retained mode with its wavevector and Hermitian weight
    /// (1 for the self-conjugate planes `kz = 0, N/2`, else 2).
    fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3], f64)) {
        let n = self.grid.n;
        let h = n / 2 + 1;
        for i in 0..n {
            let kx = self.grid.wavenumber(i);
            for j in 0..n {
                let ky = self.grid.wavenumber(j);
                for kz in 0..h {
                    let w = if kz == 0 || kz == n / 2 { 1.0 } else { 2.0 };
                    f((i * n + j) * h + kz, [kx, ky, self.grid.wavenumber(kz)], w);
                }
            }
        }
    }

    /// `∫ (S u)(x) v(x) dx` for the real Fourier multiplier `S(|k|^2)`.
    pub fn inner_with_symbol(&self, other: &Spectrum, symbol: impl Fn(f64) -> f64) -> f64 {
        assert_eq!(self.grid, other.grid);
        let mut acc = 0.0;
        self.for_each_mode(|idx, k, w| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let a = self.data[idx];
            let b = other.data[idx];
            acc += w * symbol(k2) * (a.re * b.re + a.im * b.im);
        });
        let n3 = self.grid.len() as f64;
        acc * self.grid.cell_volume() / n3
    }

    /// Multiplies every mode by `symbol(|k|^2)`.
    pub fn apply_symbol(mut self, symbol: impl Fn(f64) -> f64) -> Spectrum {
        let grid = self.grid;
        let n = grid.n;
        let h = n / 2 + 1;
        let k: Vec<f64> = grid.wavenumbers();
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * h;
                let kxy = k[i] * k[i] + k[j] * k[j];
                for kz in 0..h {
                    let kzv = grid.wavenumber(kz);
                    self.data[base + kz] *= symbol(kxy + kzv * kzv);
                }
            }
        }
        self
    }

    /// Multiplies every mode by `symbol(kx, ky, kz)`, with the derivative
    /// wavenumbers (Nyquist zeroed).
    pub fn apply_vector_symbol(mut self, symbol: impl Fn([f64; 3]) -> Complex64) -> Spectrum {
        let grid = self.grid;
        let n = grid.n;
        let h = n / 2 + 1;
        for i in 0..n {
            let kx = grid.derivative_wavenumber(i);
            for j in 0..n {
                let ky = grid.derivative_wavenumber(j);
                for kz in 0..h {
                    let idx = (i * n + j) * h + kz;
                    self.data[idx] *= symbol([kx, ky, grid.derivative_wavenumber(kz)]);
                }
            }
        }
        self
    }

    /// Zeroes every mode whose integer frequency exceeds `keep` in magnitude
    /// on any axis.
    pub fn truncate(mut self, keep: usize) -> Spectrum {
        let n = self.grid.n;
        let h = n / 2 + 1;
        let keep = keep as i64;
        for i in 0..n {
            for j in 0..n {
                for kz in 0..h {
                    let out = signed_index(i, n).abs() > keep
                        || signed_index(j, n).abs() > keep
                        || signed_index(kz, n).abs() > keep;
                    if out {
                        self.data[(i * n + j) * h + kz] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        self
    }

    pub fn into_field(self) -> Field {
        let n = self.grid.n;
        let values = fft::plan(n, n).inverse(self.data);
        Field::from_raw(self.grid, values)
    }
}

/// Random smooth field built from a few Gaussian bumps near the centre. Bump
/// widths lie in `[0.11 L, 0.18 L]`, wide enough to be resolved with about
/// 100 points per axis and narrow enough to decay below
/// [`LEAKAGE_THRESHOLD`] on the boundary.
pub fn random_smooth_field<R: Rng + ?Sized>(grid: Grid3, rng: &mut R, nonnegative: bool) -> Field {
    let l = grid.half_width();
    let bumps: Vec<([f64; 3], f64, f64)> = (0..4)
        .map(|_| {
            let c = [0, 1, 2].map(|_| rng.gen_range(-l / 6.0..l / 6.0));
            let width = rng.gen_range(0.11 * l..0.18 * l);
            let mut amp = rng.gen_range(0.3..1.0);
            if !nonnegative && rng.gen_bool(0.5) {
                amp = -amp;
            }
            (c, width, amp)
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, w, a)| {
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_validation() {
        assert!(Grid3::new(1.0, 6).is_err());
        assert!(Grid3::new(1.0, 9).is_err());
        assert!(Grid3::new(0.0, 8).is_err());
        let g = Grid3::new(2.0, 8).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.wavenumber(4), -4.0 * PI / 2.0);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
    }

    #[test]
    fn integrate_constant_and_gaussian() {
        let g = Grid3::new(1.0, 16).unwrap();
        assert!((integrate(&Field::constant(g, 1.0)) - 8.0).abs() < 1e-12);
        let g = Grid3::new(8.0, 64).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        let exact = PI.powf(1.5);
        assert!((integrate(&u) - exact).abs() / exact < 1e-8);
    }

    #[test]
    fn sine_eigenfunction() {
        let g = Grid3::new(3.0, 16).unwrap();
        let l = g.half_width();
        let u = Field::from_fn(g, |x| (PI * x[0] / l).sin());
        let l2 = u.dot(&u).unwrap();
        let expect = (PI / l).powi(2) * l2;
        assert!((gradient_sq_norm(&u) - expect).abs() / expect < 1e-10);
    }

    #[test]
    fn orthogonal_modes_have_zero_h1_inner() {
        let g = Grid3::new(2.0, 16).unwrap();
        let l = g.half_width();
        let u = Field::from_fn(g, |x| (PI * x[0] / l).cos());
        let v = Field::from_fn(g, |x| (2.0 * PI * x[1] / l).sin());
        assert!(h1_inner(&u, &v).unwrap().abs() < 1e-10);
    }

    #[test]
    fn laplacian_integrates_by_parts() {
        let g = Grid3::new(6.0, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_smooth_field(g, &mut rng, false);
        let lhs = integrate(&u.zip_map(&u.neg_laplacian(), |a, b| a * b).unwrap());
        let rhs = gradient_sq_norm(&u);
        assert!((lhs - rhs).abs() / rhs < 1e-10);
    }

    #[test]
    fn helmholtz_roundtrip() {
        let g = Grid3::new(6.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_smooth_field(g, &mut rng, false);
        let back = u.helmholtz().solve_helmholtz();
        let err = back.axpy(-1.0, &u).unwrap().max_abs();
        assert!(err < 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn leakage_detects_wide_fields() {
        let g = Grid3::new(4.0, 16).unwrap();
        let narrow = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * 4.0).exp());
        let wide = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp());
        assert!(narrow.boundary_leakage() < LEAKAGE_THRESHOLD);
        assert!(wide.boundary_leakage() > LEAKAGE_THRESHOLD);
        assert!(wide.check_leakage("wide", true).is_err());
        assert!(wide.check_leakage("wide", false).is_ok());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = Field::zeros(Grid3::new(1.0, 8).unwrap());
        let b = Field::zeros(Grid3::new(2.0, 8).unwrap());
        assert!(matches!(h1_inner(&a, &b), Err(Error::GridMismatch(_))));
        assert!(Field::from_values(*a.grid(), vec![f64::NAN; 512]).is_err());
    }
}
