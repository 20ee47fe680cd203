//! Fractional Brownian motion by cumulating exactly simulated fractional Gaussian noise.

use rand::Rng;
use rand_distr::StandardNormal;

use super::embedding::{Embedding, EmbeddingOptions, FftWorkspace};
use super::grid::GridSpec;
use super::path::SamplePath;
use super::rng::{domain, substream, RngStream};
use crate::error::{invalid, Result};

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Sampler for `B_H` on a grid with `B_H(0) = 0` and `E B_H(t)² = t^{2H}`.
#[derive(Debug, Clone)]
pub struct FbmSynth {
    hurst: f64,
    grid: GridSpec,
    /// `None` for the closed-form cases `H = 1` and `H = 1/2`.
    noise: Option<Embedding>,
}

pub struct FbmWorkspace {
    fft: Option<FftWorkspace>,
    inc_a: Vec<f64>,
    inc_b: Vec<f64>,
}

impl FbmSynth {
    pub fn new(hurst: f64, grid: &GridSpec) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 1.0) {
            return Err(invalid("hurst", format!("must lie in (0, 1], got {hurst}")));
        }
        let noise = if hurst == 1.0 || hurst == 0.5 {
            None
        } else {
            let scale = grid.step().powf(2.0 * hurst);
            Some(Embedding::from_covariance(
                grid.n() - 1,
                grid.step(),
                |k| scale * fgn_autocovariance(hurst, k),
                None,
                EmbeddingOptions::default(),
            )?)
        };
        Ok(Self {
            hurst,
            grid: *grid,
            noise,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn workspace(&self) -> FbmWorkspace {
        let m = self.grid.n() - 1;
        FbmWorkspace {
            fft: self.noise.as_ref().map(|e| e.workspace()),
            inc_a: vec![0.0; m],
            inc_b: vec![0.0; m],
        }
    }

    /// Two independent fBm paths.
    pub fn fill_pair<R: Rng + ?Sized>(&self, ws: &mut FbmWorkspace, rng: &mut R, a: &mut [f64], b: &mut [f64]) {
        match &self.noise {
            None if self.hurst == 0.5 => {
                let sd = self.grid.step().sqrt();
                a[0] = 0.0;
                b[0] = 0.0;
                for i in 1..self.grid.n() {
                    let za: f64 = rng.sample(StandardNormal);
                    let zb: f64 = rng.sample(StandardNormal);
                    a[i] = a[i - 1] + sd * za;
                    b[i] = b[i - 1] + sd * zb;
                }
            }
            None => {
                let za: f64 = rng.sample(StandardNormal);
                let zb: f64 = rng.sample(StandardNormal);
                for i in 0..self.grid.n() {
                    let t = self.grid.time(i);
                    a[i] = t * za;
                    b[i] = t * zb;
                }
            }
            Some(noise) => {
                let fft = ws.fft.as_mut().expect("workspace built for this sampler");
                noise.fill_pair(fft, rng, &mut ws.inc_a, &mut ws.inc_b);
                a[0] = 0.0;
                b[0] = 0.0;
                for i in 1..self.grid.n() {
                    a[i] = a[i - 1] + ws.inc_a[i - 1];
                    b[i] = b[i - 1] + ws.inc_b[i - 1];
                }
            }
        }
    }

    pub fn sample(&self, stream: RngStream) -> SamplePath {
        let mut ws = self.workspace();
        let mut rng = substream(stream.master_seed, domain::FBM, stream.replication / 2);
        let n = self.grid.n();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        self.fill_pair(&mut ws, &mut rng, &mut a, &mut b);
        SamplePath {
            values: if stream.replication.is_multiple_of(2) { a } else { b },
            grid: self.grid,
            stream,
        }
    }
}

pub fn sample_fbm(hurst: f64, grid: &GridSpec, stream: RngStream) -> Result<SamplePath> {
    Ok(FbmSynth::new(hurst, grid)?.sample(stream))
}
