//! Circulant embedding of a stationary covariance row.
//!
//! The Toeplitz covariance of `n` grid values is embedded in an `m × m`
//! circulant (`m` a power of two, `m ≥ 2(n-1)`). Its eigenvalues are the DFT of
//! the symmetrically extended row. When they are nonnegative, one complex FFT of
//! `sqrt(λ/m)·(Z₁ + iZ₂)` yields two independent exact sample paths in its real
//! and imaginary parts.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;
use crate::covmodels::CorrelationModel;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingOptions {
    /// Eigenvalues in `[-tol_eig·λ_max, 0)` are clamped to zero.
    pub tol_eig: f64,
    /// Largest circulant order tried before giving up.
    pub max_order: usize,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        Self {
            tol_eig: 1e-8,
            max_order: 1 << 26,
        }
    }
}

/// Precomputed circulant spectrum for one covariance row and grid.
#[derive(Clone)]
pub struct Embedding {
    m: usize,
    n: usize,
    step: f64,
    eigenvalues: Vec<f64>,
    min_raw_eigenvalue: f64,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedding")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("step", &self.step)
            .field("min_raw_eigenvalue", &self.min_raw_eigenvalue)
            .finish()
    }
}

/// Scratch buffers for [`Embedding::fill_pair`]; one per worker.
pub struct FftWorkspace {
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

fn circulant_spectrum(row: &[f64], m: usize, fft: &dyn Fft<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|k| Complex::new(row[k.min(m - k)], 0.0))
        .collect();
    fft.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

impl Embedding {
    /// Embeds the correlation of `model` sampled on `grid`.
    pub fn build(model: &CorrelationModel, grid: &GridSpec) -> Result<Self> {
        Self::build_with(model, grid, EmbeddingOptions::default())
    }

    pub fn build_with(model: &CorrelationModel, grid: &GridSpec, opts: EmbeddingOptions) -> Result<Self> {
        let step = grid.step();
        let support = model.support().map(|s| (s / step).floor() as usize);
        Self::from_covariance(grid.n(), step, |k| model.eval(k as f64 * step), support, opts)
    }

    /// Embeds an arbitrary stationary covariance `cov(k)` at lag `k·step`.
    ///
    /// `support_lags` bounds the lags where `cov` may be nonzero. Once the
    /// circulant covers that support, doubling the order only refines the
    /// frequency grid on which the same trigonometric polynomial is sampled, so
    /// a negative eigenvalue can never disappear and the build fails at once.
    pub fn from_covariance(
        n: usize,
        step: f64,
        cov: impl Fn(usize) -> f64,
        support_lags: Option<usize>,
        opts: EmbeddingOptions,
    ) -> Result<Self> {
        if n < 1 {
            return Err(invalid("n", "need at least one grid point"));
        }
        let mut m = (2 * n.saturating_sub(1)).max(2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut row: Vec<f64> = Vec::new();
        loop {
            let half = m / 2;
            while row.len() <= half {
                row.push(cov(row.len()));
            }
            let fft = planner.plan_fft_forward(m);
            let mut eigenvalues = circulant_spectrum(&row, m, fft.as_ref());
            let max_eig = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min_eig = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let tol = opts.tol_eig * max_eig.abs();
            if min_eig >= -tol {
                for e in eigenvalues.iter_mut() {
                    if *e < 0.0 {
                        *e = 0.0;
                    }
                }
                let scale = eigenvalues.iter().map(|e| (e / m as f64).sqrt()).collect();
                return Ok(Self {
                    m,
                    n,
                    step,
                    eigenvalues,
                    min_raw_eigenvalue: min_eig,
                    scale,
                    fft,
                });
            }
            let support_covered = support_lags.is_some_and(|s| half >= s);
            if support_covered || 2 * m > opts.max_order {
                return Err(Error::EmbeddingFailure {
                    min_eigenvalue: min_eig,
                    order: m,
                });
            }
            m *= 2;
        }
    }

    /// Circulant order.
    pub fn order(&self) -> usize {
        self.m
    }

    /// Number of grid points produced per path.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Clamped eigenvalues (all nonnegative).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest eigenvalue before clamping.
    pub fn min_raw_eigenvalue(&self) -> f64 {
        self.min_raw_eigenvalue
    }

    /// Covariances `c_0..c_{n-1}` reproduced by the clamped spectrum (inverse DFT).
    pub fn reproduced_covariances(&self) -> Vec<f64> {
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(self.m);
        let mut buf: Vec<Complex<f64>> = self
            .eigenvalues
            .iter()
            .map(|&e| Complex::new(e, 0.0))
            .collect();
        inv.process(&mut buf);
        buf.iter()
            .take(self.n)
            .map(|c| c.re / self.m as f64)
            .collect()
    }

    pub fn workspace(&self) -> FftWorkspace {
        FftWorkspace {
            buf: vec![Complex::new(0.0, 0.0); self.m],
            scratch: vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()],
        }
    }

    /// Draws two independent paths of length `n` into `a` and `b`.
    pub fn fill_pair<R: Rng + ?Sized>(&self, ws: &mut FftWorkspace, rng: &mut R, a: &mut [f64], b: &mut [f64]) {
        for (c, s) in ws.buf.iter_mut().zip(&self.scale) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *c = Complex::new(s * re, s * im);
        }
        self.fft.process_with_scratch(&mut ws.buf, &mut ws.scratch);
        for ((c, x), y) in ws.buf.iter().zip(a.iter_mut()).zip(b.iter_mut()).take(self.n) {
            *x = c.re;
            *y = c.im;
        }
    }

    /// Writes the spectrum in the cache format: magic, version, order, eigenvalues.
    pub fn write_spectrum<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        for e in &self.eigenvalues {
            w.write_all(&e.to_le_bytes())?;
        }
        Ok(())
    }

    /// Restores an embedding from a cached spectrum for a grid of `n` points.
    pub fn read_spectrum<R: Read>(mut r: R, n: usize, step: f64) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Config("embedding cache: bad magic bytes".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != CACHE_VERSION {
            return Err(Error::Config(format!("embedding cache: unsupported version {version}")));
        }
        let mut dword = [0u8; 8];
        r.read_exact(&mut dword)?;
        let m = u64::from_le_bytes(dword) as usize;
        if !m.is_power_of_two() || m < 2 * n.saturating_sub(1) {
            return Err(Error::Config(format!("embedding cache: order {m} does not fit {n} points")));
        }
        let mut eigenvalues = Vec::with_capacity(m);
        for _ in 0..m {
            r.read_exact(&mut dword)?;
            let e = f64::from_le_bytes(dword);
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("embedding cache: invalid eigenvalue {e}")));
            }
            eigenvalues.push(e);
        }
        let fft = FftPlanner::new().plan_fft_forward(m);
        let scale = eigenvalues.iter().map(|e| (e / m as f64).sqrt()).collect();
        Ok(Self {
            m,
            n,
            step,
            min_raw_eigenvalue: eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
            eigenvalues,
            scale,
            fft,
        })
    }

    /// Builds through an on-disk cache keyed by `(model hash, n, Δ)`.
    pub fn build_cached(model: &CorrelationModel, grid: &GridSpec, dir: impl AsRef<Path>) -> Result<Self> {
        let path = cache_path(dir.as_ref(), model, grid);
        if let Ok(file) = std::fs::File::open(&path) {
            if let Ok(e) = Self::read_spectrum(std::io::BufReader::new(file), grid.n(), grid.step()) {
                return Ok(e);
            }
        }
        let e = Self::build(model, grid)?;
        std::fs::create_dir_all(dir.as_ref())?;
        let tmp = path.with_extension("tmp");
        e.write_spectrum(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(tmp, &path)?;
        Ok(e)
    }
}

pub const CACHE_MAGIC: &[u8; 8] = b"GMXEMBED";
pub const CACHE_VERSION: u32 = 1;

/// FNV-1a over the model descriptor.
pub fn model_hash(model: &CorrelationModel) -> u64 {
    model
        .descriptor()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn cache_path(dir: &Path, model: &CorrelationModel, grid: &GridSpec) -> PathBuf {
    dir.join(format!(
        "emb-{:016x}-{}-{:016x}.bin",
        model_hash(model),
        grid.n(),
        grid.step().to_bits()
    ))
}
