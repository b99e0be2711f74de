//! Three-dimensional real FFTs with optional zero-padding pruning.
//!
//! A transform of size `m³` may be restricted to inputs supported in the
//! leading `n_in³` corner of the cube. The forward pass skips the all-zero
//! lines and the inverse pass only reconstructs the same corner, which is
//! what a free-space convolution on a doubled domain needs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub struct Rfft3 {
    m: usize,
    n_in: usize,
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Rfft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rfft3").field("m", &self.m).field("n_in", &self.n_in).finish()
    }
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<Rfft3>>>;

/// Shared plan cache; plans are immutable once built.
pub fn plan(m: usize, n_in: usize) -> Arc<Rfft3> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard.entry((m, n_in)).or_insert_with(|| Arc::new(Rfft3::new(m, n_in))).clone()
}

impl Rfft3 {
    pub fn new(m: usize, n_in: usize) -> Self {
        assert!(n_in <= m && m >= 2 && m.is_multiple_of(2));
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Rfft3 {
            m,
            n_in,
            half: m / 2 + 1,
            r2c: rp.plan_fft_forward(m),
            c2r: rp.plan_fft_inverse(m),
            fwd: cp.plan_fft_forward(m),
            inv: cp.plan_fft_inverse(m),
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Number of retained kz modes per line (`m/2 + 1`).
    pub fn half(&self) -> usize {
        self.half
    }

    pub fn spectrum_len(&self) -> usize {
        self.m * self.m * self.half
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (i * self.m + j) * self.half
    }

    /// Forward transform of an `n_in³` real array, implicitly zero-padded to `m³`.
    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let (m, n, h) = (self.m, self.n_in, self.half);
        assert_eq!(input.len(), n * n * n);
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];

        let mut line = self.r2c.make_input_vec();
        let mut out = self.r2c.make_output_vec();
        let mut rscratch = self.r2c.make_scratch_vec();
        for i in 0..n {
            for j in 0..n {
                line[..n].copy_from_slice(&input[(i * n + j) * n..][..n]);
                line[n..].fill(0.0);
                self.r2c.process_with_scratch(&mut line, &mut out, &mut rscratch).expect("r2c length");
                let at = self.idx(i, j);
                spec[at..at + h].copy_from_slice(&out);
            }
        }

        let mut buf = vec![Complex64::new(0.0, 0.0); h * m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        // y lines, only planes i < n carry data
        for i in 0..n {
            buf.fill(Complex64::new(0.0, 0.0));
            for j in 0..n {
                let at = self.idx(i, j);
                for kz in 0..h {
                    buf[kz * m + j] = spec[at + kz];
                }
            }
            self.fwd.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..m {
                let at = self.idx(i, j);
                for kz in 0..h {
                    spec[at + kz] = buf[kz * m + j];
                }
            }
        }
        // x lines
        for j in 0..m {
            buf.fill(Complex64::new(0.0, 0.0));
            for i in 0..n {
                let at = self.idx(i, j);
                for kz in 0..h {
                    buf[kz * m + i] = spec[at + kz];
                }
            }
            self.fwd.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..m {
                let at = self.idx(i, j);
                for kz in 0..h {
                    spec[at + kz] = buf[kz * m + i];
                }
            }
        }
        spec
    }

    /// Normalized inverse transform; returns only the leading `n_in³` corner.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let (m, n, h) = (self.m, self.n_in, self.half);
        assert_eq!(spec.len(), self.spectrum_len());
        let mut buf = vec![Complex64::new(0.0, 0.0); h * m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];

        for j in 0..m {
            for i in 0..m {
                let at = self.idx(i, j);
                for kz in 0..h {
                    buf[kz * m + i] = spec[at + kz];
                }
            }
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                let at = self.idx(i, j);
                for kz in 0..h {
                    spec[at + kz] = buf[kz * m + i];
                }
            }
        }
        for i in 0..n {
            for j in 0..m {
                let at = self.idx(i, j);
                for kz in 0..h {
                    buf[kz * m + j] = spec[at + kz];
                }
            }
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                let at = self.idx(i, j);
                for kz in 0..h {
                    spec[at + kz] = buf[kz * m + j];
                }
            }
        }

        let scale = 1.0 / (m * m * m) as f64;
        let mut out = vec![0.0; n * n * n];
        let mut line = self.c2r.make_input_vec();
        let mut real = self.c2r.make_output_vec();
        let mut rscratch = self.c2r.make_scratch_vec();
        for i in 0..n {
            for j in 0..n {
                let at = self.idx(i, j);
                line.copy_from_slice(&spec[at..at + h]);
                // the DC and Nyquist bins of a real signal are real
                line[0].im = 0.0;
                line[h - 1].im = 0.0;
                self.c2r.process_with_scratch(&mut line, &mut real, &mut rscratch).expect("c2r length");
                let dst = &mut out[(i * n + j) * n..][..n];
                for (d, r) in dst.iter_mut().zip(&real[..n]) {
                    *d = r * scale;
                }
            }
        }
        out
    }
}

/// Signed integer frequency of index `i` on an `m`-point periodic axis. The
/// Nyquist index `m/2` maps to `-m/2`.
#[inline]
pub fn signed_index(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}
