//! Dense Cholesky synthesis; the small-`n` oracle for the circulant sampler.

use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::GridSpec;
use super::path::SamplePath;
use super::rng::{domain, substream, RngStream};
use crate::covmodels::CorrelationModel;
use crate::error::{invalid, Error, Result};

pub const MAX_POINTS: usize = 2048;
const PIVOT_TOL: f64 = 1e-10;

/// Lower-triangular factor of the `n × n` Toeplitz covariance.
///
/// Semidefinite matrices are accepted: a pivot within `PIVOT_TOL` of zero
/// yields a zero column, provided the remaining column entries vanish too.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(model: &CorrelationModel, grid: &GridSpec) -> Result<Self> {
        let n = grid.n();
        if n > MAX_POINTS {
            return Err(invalid("grid", format!("{n} points exceeds the dense limit {MAX_POINTS}")));
        }
        let cov: Vec<f64> = (0..n).map(|k| model.eval(k as f64 * grid.step())).collect();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = cov[0] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
            if d < -PIVOT_TOL {
                return Err(Error::FactorizationFailure { row: j, pivot: d });
            }
            if d <= PIVOT_TOL {
                for i in j + 1..n {
                    let resid = cov[i - j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                    if resid.abs() > 1e-6 {
                        return Err(Error::FactorizationFailure { row: j, pivot: d });
                    }
                }
                continue;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let s = cov[i - j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.lower[i * self.n..i * self.n + i + 1];
            *o = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        }
    }

    pub fn sample(&self, grid: &GridSpec, stream: RngStream) -> SamplePath {
        let mut rng = substream(stream.master_seed, domain::CHOLESKY, stream.replication);
        let mut z = vec![0.0; self.n];
        let mut values = vec![0.0; self.n];
        self.fill(&mut rng, &mut z, &mut values);
        SamplePath {
            values,
            grid: *grid,
            stream,
        }
    }
}

pub fn cholesky_path(model: &CorrelationModel, grid: &GridSpec, stream: RngStream) -> Result<SamplePath> {
    Ok(CholeskyFactor::new(model, grid)?.sample(grid, stream))
}
