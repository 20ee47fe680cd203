//! Monte Carlo estimation of Pickands constants and grid deficiencies.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gpsim::{domain, substream, FbmSynth, GridSpec};

/// Exponents are clipped here before `exp`.
pub const EXPONENT_CLIP: f64 = 700.0;
pub const DEFAULT_STEP: f64 = 0.002;
pub const DEFAULT_REPS: u64 = 2_000_000;
pub const MIN_REPS: u64 = 1_000;
const Z95: f64 = 1.959_963_984_540_054;

/// Windows `λ` with `λ^α ∈ {1, 2, 4}`, or `{1/4, 1/2, 1}` when `α > 3/2`.
///
/// The variance of `exp(max)` grows like `exp(2λ^α)`; for smooth paths the
/// functional is close to linear already at small windows.
pub fn default_schedule(alpha: f64) -> Vec<f64> {
    let base: [f64; 3] = if alpha > 1.5 { [0.25, 0.5, 1.0] } else { [1.0, 2.0, 4.0] };
    base.iter().map(|v| v.powf(1.0 / alpha)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEstimate {
    pub lambda: f64,
    pub mean: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PickandsEstimate {
    pub alpha: f64,
    pub grid_step: f64,
    pub reps: u64,
    pub windows: Vec<WindowEstimate>,
    pub h_hat: f64,
    pub ci: f64,
    pub intercept: f64,
    pub clipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDeficiency {
    pub alpha: f64,
    pub a: f64,
    pub delta: f64,
    pub ci: f64,
    pub h_hat: f64,
    pub h_grid: f64,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_inputs(alpha: f64, delta_t: f64, reps: u64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("must lie in (0, 2], got {alpha}")));
    }
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(invalid("delta_t", format!("must be positive, got {delta_t}")));
    }
    if reps < MIN_REPS {
        return Err(invalid("reps", format!("need at least {MIN_REPS}, got {reps}")));
    }
    Ok(())
}

/// Per replication: `exp(max)` at each window end, for each stride.
struct Draws {
    /// `values[rep][stride_idx * windows + k]`
    values: Vec<Vec<f64>>,
    clipped: u64,
}

fn simulate(
    alpha: f64,
    delta_t: f64,
    lambdas: &[f64],
    strides: &[usize],
    reps: u64,
    seed: u64,
) -> Result<Draws> {
    let lambda_max = lambdas.iter().cloned().fold(0.0, f64::max);
    let grid = GridSpec::new(lambda_max, delta_t)?;
    let synth = FbmSynth::new(alpha / 2.0, &grid)?;
    let ends: Vec<usize> = lambdas
        .iter()
        .map(|&l| ((l / delta_t + 1e-9).floor() as usize).min(grid.n() - 1))
        .collect();
    let drift: Vec<f64> = (0..grid.n()).map(|i| grid.time(i).powf(alpha)).collect();
    let n = grid.n();
    let width = lambdas.len() * strides.len();
    let pairs = reps.div_ceil(2);

    let per_pair: Vec<(Vec<f64>, Vec<f64>, u64)> = (0..pairs)
        .into_par_iter()
        .map_init(
            || (synth.workspace(), vec![0.0; n], vec![0.0; n]),
            |(ws, a, b), k| {
                let mut rng = substream(seed, domain::FBM, k);
                synth.fill_pair(ws, &mut rng, a, b);
                let mut clipped = 0;
                let mut eval = |path: &[f64]| {
                    let mut out = vec![0.0; width];
                    for (si, &stride) in strides.iter().enumerate() {
                        let mut best = 0.0f64;
                        let mut from = stride;
                        for (kw, &end) in ends.iter().enumerate() {
                            let last = end - end % stride;
                            if from <= last {
                                best = (from..=last)
                                    .step_by(stride)
                                    .map(|i| std::f64::consts::SQRT_2 * path[i] - drift[i])
                                    .fold(best, f64::max);
                                from = last + stride;
                            }
                            let e = if best > EXPONENT_CLIP {
                                clipped += 1;
                                EXPONENT_CLIP
                            } else {
                                best
                            };
                            out[si * lambdas.len() + kw] = e.exp();
                        }
                    }
                    out
                };
                let ea = eval(a);
                let eb = eval(b);
                (ea, eb, clipped)
            },
        )
        .collect();

    let mut values = Vec::with_capacity(reps as usize);
    let mut clipped = 0;
    for (ea, eb, c) in per_pair {
        clipped += c;
        values.push(ea);
        if (values.len() as u64) < reps {
            values.push(eb);
        }
    }
    Ok(Draws { values, clipped })
}

fn mean_ci(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mut s = Neumaier::default();
    xs.clone().for_each(|x| s.add(x));
    let mean = s.value() / n as f64;
    let mut ss = Neumaier::default();
    xs.for_each(|x| ss.add((x - mean) * (x - mean)));
    let var = ss.value() / (n as f64 - 1.0);
    (mean, Z95 * (var / n as f64).sqrt())
}

/// Least-squares weights `w_k` with slope = Σ w_k y_k.
fn slope_weights(lambdas: &[f64]) -> Vec<f64> {
    let m = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    let sxx: f64 = lambdas.iter().map(|l| (l - m) * (l - m)).sum();
    lambdas.iter().map(|l| (l - m) / sxx).collect()
}

/// `H_α(λ) = E exp(max_{[0,λ]} √2 B_{α/2}(t) − t^α)` on a step-`delta_t` grid.
pub fn estimate_h_lambda(alpha: f64, lambda: f64, delta_t: f64, reps: u64, seed: u64) -> Result<WindowEstimate> {
    check_inputs(alpha, delta_t, reps)?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if lambda <= delta_t {
        return Ok(WindowEstimate {
            lambda,
            mean: 1.0,
            ci: 0.0,
        });
    }
    if delta_t > lambda / 32.0 {
        return Err(invalid("delta_t", format!("must not exceed lambda / 32 = {}", lambda / 32.0)));
    }
    let draws = simulate(alpha, delta_t, &[lambda], &[1], reps, seed)?;
    let (mean, ci) = mean_ci(draws.values.iter().map(|v| v[0]), draws.values.len());
    Ok(WindowEstimate { lambda, mean, ci })
}

fn check_schedule(schedule: &[f64], delta_t: f64) -> Result<()> {
    if schedule.len() < 3 {
        return Err(invalid("schedule", "need at least 3 windows"));
    }
    if !schedule.windows(2).all(|w| w[0] < w[1]) || !(schedule[0] > 0.0) {
        return Err(invalid("schedule", "windows must be positive and strictly increasing"));
    }
    if delta_t > schedule[0] / 32.0 {
        return Err(invalid("delta_t", format!("must not exceed {} (smallest window / 32)", schedule[0] / 32.0)));
    }
    Ok(())
}

fn summarize(alpha: f64, delta_t: f64, schedule: &[f64], rows: &[Vec<f64>], offset: usize, clipped: u64) -> PickandsEstimate {
    let n = rows.len();
    let windows: Vec<WindowEstimate> = schedule
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let (mean, ci) = mean_ci(rows.iter().map(|v| v[offset + k]), n);
            WindowEstimate { lambda, mean, ci }
        })
        .collect();
    let w = slope_weights(schedule);
    let slope_of = |v: &Vec<f64>| -> f64 { w.iter().enumerate().map(|(k, wk)| wk * v[offset + k]).sum() };
    let (h_hat, ci) = mean_ci(rows.iter().map(slope_of), n);
    let lbar = schedule.iter().sum::<f64>() / schedule.len() as f64;
    let ybar = windows.iter().map(|w| w.mean).sum::<f64>() / windows.len() as f64;
    PickandsEstimate {
        alpha,
        grid_step: delta_t,
        reps: n as u64,
        windows,
        h_hat,
        ci,
        intercept: ybar - h_hat * lbar,
        clipped,
    }
}

/// Slope of `λ ↦ H_α(λ)` by least squares over `schedule`, all windows from one path.
pub fn estimate_h(alpha: f64, schedule: &[f64], delta_t: f64, reps: u64, seed: u64) -> Result<PickandsEstimate> {
    check_inputs(alpha, delta_t, reps)?;
    check_schedule(schedule, delta_t)?;
    let draws = simulate(alpha, delta_t, schedule, &[1], reps, seed)?;
    Ok(summarize(alpha, delta_t, schedule, &draws.values, 0, draws.clipped))
}

/// `δ(a) = 1 − H^{grid}(a) / H_hat`, both slopes from the same paths.
///
/// `a` must be a multiple of `delta_t`.
pub fn estimate_delta(
    alpha: f64,
    a: f64,
    schedule: &[f64],
    delta_t: f64,
    reps: u64,
    seed: u64,
) -> Result<GridDeficiency> {
    check_inputs(alpha, delta_t, reps)?;
    check_schedule(schedule, delta_t)?;
    let ratio = a / delta_t;
    let stride = ratio.round();
    if !(a > 0.0) || stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio {
        return Err(invalid("a", format!("must be a positive multiple of delta_t = {delta_t}, got {a}")));
    }
    let draws = simulate(alpha, delta_t, schedule, &[1, stride as usize], reps, seed)?;
    let k = schedule.len();
    let fine = summarize(alpha, delta_t, schedule, &draws.values, 0, draws.clipped);
    let coarse = summarize(alpha, a, schedule, &draws.values, k, draws.clipped);
    let w = slope_weights(schedule);
    let n = draws.values.len() as f64;
    let slopes = |off: usize| -> Vec<f64> {
        draws
            .values
            .iter()
            .map(|v| w.iter().enumerate().map(|(j, wj)| wj * v[off + j]).sum())
            .collect()
    };
    let (s, g) = (slopes(0), slopes(k));
    let ratio = coarse.h_hat / fine.h_hat;
    let mut acc = Neumaier::default();
    for (si, gi) in s.iter().zip(&g) {
        let d = (gi - coarse.h_hat) - ratio * (si - fine.h_hat);
        acc.add(d * d);
    }
    let var = acc.value() / (n - 1.0) / (fine.h_hat * fine.h_hat);
    Ok(GridDeficiency {
        alpha,
        a,
        delta: 1.0 - ratio,
        ci: Z95 * (var / n).sqrt(),
        h_hat: fine.h_hat,
        h_grid: coarse.h_hat,
    })
}
