//! Block comparison process with a shared long-range component.

use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::GridSpec;
use super::path::{GapMask, SamplePath};
use super::rng::{domain, substream, RngStream};
use super::synth::{Backend, PathSynth, SynthWorkspace};
use crate::covmodels::CorrelationModel;
use crate::error::{invalid, Result};

/// `ξ(t) = (1 − ρ)^{1/2} η(t) + ρ^{1/2} W` on blocks `[j, j + 1 − ε)`, with
/// an independent copy of `η` per block and `ρ = r / ln T`.
#[derive(Debug, Clone)]
pub struct ComparisonSynth {
    grid: GridSpec,
    eps: f64,
    rho: f64,
    block: PathSynth,
    block_len: usize,
    /// `(first index, point count)` per block.
    blocks: Vec<(usize, usize)>,
    mask: GapMask,
}

pub struct ComparisonWorkspace {
    synth: SynthWorkspace,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ComparisonSynth {
    pub fn new(model: &CorrelationModel, grid: &GridSpec, eps: f64, r: f64) -> Result<Self> {
        let horizon = grid.horizon();
        if !(horizon > std::f64::consts::E) {
            return Err(invalid("T", format!("must exceed e, got {horizon}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
        }
        if !(r >= 0.0) {
            return Err(invalid("r", format!("must be nonnegative, got {r}")));
        }
        let rho = r / horizon.ln();
        if rho >= 1.0 {
            return Err(invalid("r", format!("r / ln T = {rho} must be below 1")));
        }
        let keep = 1.0 - eps;
        let mut excluded = vec![false; grid.n()];
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        for (i, ex) in excluded.iter_mut().enumerate() {
            let t = grid.time(i);
            let j = t.floor();
            if t - j >= keep {
                *ex = true;
                continue;
            }
            let j = j as usize;
            match blocks.last_mut() {
                Some((start, len)) if (grid.time(*start)).floor() as usize == j => *len += 1,
                _ => blocks.push((i, 1)),
            }
        }
        let block_len = blocks.iter().map(|b| b.1).max().unwrap_or(0).max(2);
        let block_grid = GridSpec::with_points(block_len, grid.step())?;
        let block = PathSynth::new(model, &block_grid, Backend::Auto)?;
        Ok(Self {
            grid: *grid,
            eps,
            rho,
            block,
            block_len,
            blocks,
            mask: GapMask(excluded),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mask(&self) -> &GapMask {
        &self.mask
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn workspace(&self) -> ComparisonWorkspace {
        ComparisonWorkspace {
            synth: self.block.workspace(),
            a: vec![0.0; self.block_len],
            b: vec![0.0; self.block_len],
        }
    }

    /// Fills `out` with ξ; gap points are set to zero and must be masked.
    pub fn fill<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        ws: &mut ComparisonWorkspace,
        block_rng: &mut R1,
        shared_rng: &mut R2,
        out: &mut [f64],
    ) {
        let w: f64 = shared_rng.sample(StandardNormal);
        let shift = self.rho.sqrt() * w;
        let scale = (1.0 - self.rho).sqrt();
        out.iter_mut().for_each(|v| *v = 0.0);
        for pair in self.blocks.chunks(2) {
            self.block.fill_pair(&mut ws.synth, block_rng, &mut ws.a, &mut ws.b);
            for (&(start, len), src) in pair.iter().zip([&ws.a, &ws.b]) {
                for k in 0..len {
                    out[start + k] = scale * src[k] + shift;
                }
            }
        }
    }

    pub fn sample(&self, stream: RngStream) -> (SamplePath, GapMask) {
        let mut ws = self.workspace();
        let mut block_rng = substream(stream.master_seed, domain::BLOCKS, stream.replication);
        let mut shared_rng = substream(stream.master_seed, domain::SHARED, stream.replication);
        let mut values = vec![0.0; self.grid.n()];
        self.fill(&mut ws, &mut block_rng, &mut shared_rng, &mut values);
        (
            SamplePath {
                values,
                grid: self.grid,
                stream,
            },
            self.mask.clone(),
        )
    }
}

pub fn sample_comparison_path(
    model: &CorrelationModel,
    grid: &GridSpec,
    eps: f64,
    r: f64,
    stream: RngStream,
) -> Result<(SamplePath, GapMask)> {
    Ok(ComparisonSynth::new(model, grid, eps, r)?.sample(stream))
}
