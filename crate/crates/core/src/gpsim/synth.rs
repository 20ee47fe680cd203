//! Path synthesizers behind one interface.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::embedding::{Embedding, FftWorkspace};
use super::grid::GridSpec;
use super::path::SamplePath;
use super::rng::{domain, substream, RngStream};
use crate::covmodels::{CorrelationModel, Family};
use crate::error::{invalid, Result};

/// Which exact synthesis method to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Markov recursion when the model allows it, circulant embedding otherwise.
    #[default]
    Auto,
    Circulant,
    /// Exact AR(1) recursion; only for `r(t) = exp(-t)`.
    Ar1,
}

/// Exact AR(1) recursion for the exponential correlation on a uniform grid.
#[derive(Debug, Clone)]
pub struct Ar1Synth {
    n: usize,
    phi: f64,
    innovation: f64,
}

impl Ar1Synth {
    pub fn new(grid: &GridSpec) -> Self {
        let phi = (-grid.step()).exp();
        Self {
            n: grid.n(),
            phi,
            innovation: (-(-2.0 * grid.step()).exp_m1()).sqrt(),
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut x: f64 = rng.sample(StandardNormal);
        out[0] = x;
        for v in out.iter_mut().take(self.n).skip(1) {
            let z: f64 = rng.sample(StandardNormal);
            x = self.phi * x + self.innovation * z;
            *v = x;
        }
    }
}

fn supports_ar1(model: &CorrelationModel) -> bool {
    matches!(model.family(), Family::Weak) && model.alpha() == 1.0
}

/// Exact stationary path synthesis for a model on a grid.
#[derive(Debug, Clone)]
pub enum PathSynth {
    Circulant(Embedding),
    Ar1(Ar1Synth),
}

/// Per-worker scratch space.
pub struct SynthWorkspace {
    fft: Option<FftWorkspace>,
}

impl PathSynth {
    pub fn new(model: &CorrelationModel, grid: &GridSpec, backend: Backend) -> Result<Self> {
        match backend {
            Backend::Ar1 if !supports_ar1(model) => Err(invalid(
                "backend",
                "ar1 synthesis requires the Weak(1) family r(t) = exp(-t)",
            )),
            Backend::Ar1 => Ok(Self::Ar1(Ar1Synth::new(grid))),
            Backend::Auto if supports_ar1(model) => Ok(Self::Ar1(Ar1Synth::new(grid))),
            Backend::Auto | Backend::Circulant => Ok(Self::Circulant(Embedding::build(model, grid)?)),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Circulant(e) => e.n(),
            Self::Ar1(a) => a.n,
        }
    }

    pub fn workspace(&self) -> SynthWorkspace {
        SynthWorkspace {
            fft: match self {
                Self::Circulant(e) => Some(e.workspace()),
                Self::Ar1(_) => None,
            },
        }
    }

    /// Two independent paths from one draw of `rng`.
    pub fn fill_pair<R: Rng + ?Sized>(&self, ws: &mut SynthWorkspace, rng: &mut R, a: &mut [f64], b: &mut [f64]) {
        match self {
            Self::Circulant(e) => {
                let fft = ws.fft.get_or_insert_with(|| e.workspace());
                e.fill_pair(fft, rng, a, b)
            }
            Self::Ar1(s) => {
                s.fill(rng, a);
                s.fill(rng, b);
            }
        }
    }

    /// Path of one replication. Replications `2k` and `2k+1` are the two halves
    /// of pair `k`, drawn from substream `k`.
    pub fn sample_path(&self, grid: &GridSpec, stream: RngStream) -> SamplePath {
        let mut ws = self.workspace();
        let mut rng = substream(stream.master_seed, domain::PATH, stream.replication / 2);
        let mut a = vec![0.0; self.n()];
        let mut b = vec![0.0; self.n()];
        self.fill_pair(&mut ws, &mut rng, &mut a, &mut b);
        SamplePath {
            values: if stream.replication.is_multiple_of(2) { a } else { b },
            grid: *grid,
            stream,
        }
    }
}

/// One exact path of `embedding`'s process.
pub fn sample_path(embedding: &Embedding, grid: &GridSpec, stream: RngStream) -> SamplePath {
    let mut ws = embedding.workspace();
    let mut rng = substream(stream.master_seed, domain::PATH, stream.replication / 2);
    let mut a = vec![0.0; embedding.n()];
    let mut b = vec![0.0; embedding.n()];
    embedding.fill_pair(&mut ws, &mut rng, &mut a, &mut b);
    SamplePath {
        values: if stream.replication.is_multiple_of(2) { a } else { b },
        grid: *grid,
        stream,
    }
}
