//! Deterministic parallel experiment runner.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentBackend, ExperimentConfig, Gates, Theorem};
use super::ecdf::{ks_against, EmpiricalCdf};
use crate::covmodels::{CorrelationModel, Regime};
use crate::error::{Error, Result};
use crate::gpsim::{
    domain, path_extremes, path_max, substream, Backend, ComparisonSynth, GridSpec, PathSynth,
};
use crate::limitlaws::{lambda_r_cdf, mu, solve_threshold, LimitLaw, Normalizers, DEFAULT_QUAD_ORDER};

/// Largest simulation grid.
pub const MAX_GRID_POINTS: usize = 1 << 22;
/// Horizon of the regime probe grid.
pub const REGIME_PROBE_HORIZON: f64 = 1e8;
pub const REGIME_PROBES: usize = 25;
/// Smallest exceedance probability the ratio experiment accepts.
pub const MIN_EXCEEDANCE: f64 = 1e-3;
/// Median of |W|.
pub const HALF_NORMAL_MEDIAN: f64 = 0.674_489_750_196_081_7;
const Z95: f64 = 1.959_963_984_540_054;

/// Path generator for one experiment.
pub enum Simulator {
    Direct(PathSynth),
    Comparison(ComparisonSynth),
    /// `Y` synthesizer and `ρ = r(T)`.
    Decomposition(PathSynth, f64),
}

impl Simulator {
    pub fn n(&self) -> usize {
        match self {
            Self::Direct(s) | Self::Decomposition(s, _) => s.n(),
            Self::Comparison(c) => c.grid().n(),
        }
    }

    /// Maxima (of `|X|`, or of `X` when `absolute` is false) in replication order.
    pub fn maxima(&self, reps: u64, seed: u64, absolute: bool) -> Vec<f64> {
        let n = self.n();
        match self {
            Self::Direct(synth) | Self::Decomposition(synth, _) => {
                let shift = match self {
                    Self::Decomposition(_, rho) => Some(*rho),
                    _ => None,
                };
                let pairs: Vec<[f64; 2]> = (0..reps.div_ceil(2))
                    .into_par_iter()
                    .map_init(
                        || (synth.workspace(), vec![0.0; n], vec![0.0; n]),
                        |(ws, a, b), k| {
                            let mut rng = substream(seed, domain::PATH, k);
                            synth.fill_pair(ws, &mut rng, a, b);
                            let mut out = [0.0; 2];
                            for (j, path) in [&*a, &*b].into_iter().enumerate() {
                                out[j] = match shift {
                                    None => path_max(path, absolute, None),
                                    Some(rho) => {
                                        let rep = 2 * k + j as u64;
                                        let w: f64 = substream(seed, domain::SHARED, rep).sample(StandardNormal);
                                        let (s, c) = ((1.0 - rho).sqrt(), rho.sqrt() * w);
                                        let (hi, lo) = path_extremes(path, None);
                                        let top = s * hi + c;
                                        if absolute {
                                            top.max(-(s * lo + c))
                                        } else {
                                            top
                                        }
                                    }
                                };
                            }
                            out
                        },
                    )
                    .collect();
                pairs.into_iter().flatten().take(reps as usize).collect()
            }
            Self::Comparison(c) => (0..reps)
                .into_par_iter()
                .map_init(
                    || (c.workspace(), vec![0.0; n]),
                    |(ws, out), rep| {
                        let mut block_rng = substream(seed, domain::BLOCKS, rep);
                        let mut shared_rng = substream(seed, domain::SHARED, rep);
                        c.fill(ws, &mut block_rng, &mut shared_rng, out);
                        path_max(out, absolute, Some(c.mask()))
                    },
                )
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateOutcome {
    pub gate: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

/// One row of the report CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfRow {
    pub x: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub theorem: String,
    pub ks: Option<f64>,
    pub reps: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    pub wall_ms: u64,
    pub model: String,
    pub regime: String,
    pub backend: String,
    pub law: Option<String>,
    pub requested_horizon: f64,
    pub horizon_reduced: bool,
    pub grid_step: f64,
    pub grid_points: usize,
    pub pickands_constant: f64,
    pub normalizer_a: Option<f64>,
    pub normalizer_b: Option<f64>,
    pub ks_wrong_law: Option<f64>,
    pub median: Option<f64>,
    pub threshold: Option<f64>,
    pub p_hat: Option<f64>,
    pub p_theory: Option<f64>,
    pub p_se: Option<f64>,
    pub ratio: Option<f64>,
    pub ratio_ci: Option<f64>,
    pub gates: Vec<GateOutcome>,
    pub passed: bool,
    /// Normalized statistics in replication order.
    #[serde(skip)]
    pub samples: Vec<f64>,
    /// Raw maxima in replication order.
    #[serde(skip)]
    pub maxima: Vec<f64>,
    #[serde(skip)]
    pub rows: Vec<CdfRow>,
}

impl ExperimentReport {
    /// Summary JSON with `wall_ms` removed, for reproducibility comparisons.
    pub fn fingerprint(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_ms");
        }
        Ok(serde_json::to_string(&v)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,empirical_cdf,theoretical_cdf,abs_diff")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.x,
                r.empirical,
                r.theoretical,
                (r.empirical - r.theoretical).abs()
            )?;
        }
        Ok(())
    }
}

fn expected_regime(tag: Theorem) -> Regime {
    if tag.is_weak() {
        Regime::Berman
    } else if tag.is_mixed() {
        Regime::StrongFinite
    } else {
        Regime::StrongInfinite
    }
}

fn check_regime(model: &CorrelationModel, tag: Theorem) -> Result<Regime> {
    let found = model.regime_diagnostics(REGIME_PROBE_HORIZON, REGIME_PROBES)?.classification;
    let expected = expected_regime(tag);
    if found != expected {
        return Err(Error::RegimeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(found)
}

/// Grid over `[0, T]`, shrinking `T` when the point cap binds.
fn capped_grid(horizon: f64, step: f64) -> Result<(GridSpec, bool)> {
    if horizon / step + 1.0 > MAX_GRID_POINTS as f64 {
        let reduced = (MAX_GRID_POINTS - 1) as f64 * step;
        Ok((GridSpec::new(reduced, step)?, true))
    } else {
        Ok((GridSpec::new(horizon, step)?, false))
    }
}

fn build_simulator(
    cfg: &ExperimentConfig,
    model: &CorrelationModel,
    grid: &GridSpec,
    r_mixed: f64,
) -> Result<Simulator> {
    Ok(match cfg.backend() {
        ExperimentBackend::Auto => Simulator::Direct(PathSynth::new(model, grid, Backend::Auto)?),
        ExperimentBackend::Circulant => Simulator::Direct(PathSynth::new(model, grid, Backend::Circulant)?),
        ExperimentBackend::Ar1 => Simulator::Direct(PathSynth::new(model, grid, Backend::Ar1)?),
        ExperimentBackend::Comparison => {
            Simulator::Comparison(ComparisonSynth::new(model, grid, cfg.eps.unwrap_or_default(), r_mixed)?)
        }
        ExperimentBackend::Decomposition => {
            let weak = CorrelationModel::weak(model.alpha())?;
            let rho = model.eval(grid.horizon());
            Simulator::Decomposition(PathSynth::new(&weak, grid, Backend::Auto)?, rho)
        }
    })
}

fn gate(gates: &mut Vec<GateOutcome>, name: &str, value: f64, limit: f64, passed: bool) {
    gates.push(GateOutcome {
        gate: name.to_string(),
        value,
        limit,
        passed,
    });
}

fn cdf_rows(ecdf: &EmpiricalCdf, law: &LimitLaw) -> Vec<CdfRow> {
    let n = ecdf.len() as f64;
    ecdf.sorted()
        .iter()
        .enumerate()
        .map(|(i, &x)| CdfRow {
            x,
            empirical: (i + 1) as f64 / n,
            theoretical: law.cdf(x),
        })
        .collect()
}

/// Runs one experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build(base_dir)?;
    let tag = cfg.theorem;
    let regime = check_regime(&model, tag)?;
    let alpha = model.alpha();
    let h_alpha = cfg.pickands_constant()?;
    let seed = cfg.seed_or_default();
    let absolute = !cfg.one_sided();
    let r_mixed = cfg.r.unwrap_or(model.r_target());
    let policy = cfg.grid();
    let gates_cfg = cfg.gates.clone().unwrap_or_default();

    let mut report = ExperimentReport {
        theorem: tag.to_string(),
        ks: None,
        reps: cfg.reps,
        horizon: 0.0,
        seed,
        wall_ms: 0,
        model: model.descriptor(),
        regime: regime.to_string(),
        backend: format!("{:?}", cfg.backend()).to_lowercase(),
        law: None,
        requested_horizon: 0.0,
        horizon_reduced: false,
        grid_step: 0.0,
        grid_points: 0,
        pickands_constant: h_alpha,
        normalizer_a: None,
        normalizer_b: None,
        ks_wrong_law: None,
        median: None,
        threshold: None,
        p_hat: None,
        p_theory: None,
        p_se: None,
        ratio: None,
        ratio_ci: None,
        gates: Vec::new(),
        passed: true,
        samples: Vec::new(),
        maxima: Vec::new(),
        rows: Vec::new(),
    };

    if tag == Theorem::A1Ratio {
        run_ratio(cfg, &model, h_alpha, seed, absolute, &gates_cfg, &mut report)?;
    } else {
        let requested = cfg.horizon.expect("validated");
        report.requested_horizon = requested;
        // Grid reference level: b_T for the Gumbel-type tags, u_n for the threshold tags.
        let u_ref = match cfg.theta {
            Some(theta) => solve_threshold(requested, theta, alpha, h_alpha)?,
            None => Normalizers::new(requested, alpha, h_alpha)?.b,
        };
        let (grid, reduced) = capped_grid(requested, policy.step_for(u_ref, alpha))?;
        let horizon = grid.horizon();
        report.horizon = horizon;
        report.horizon_reduced = reduced;
        report.grid_step = grid.step();
        report.grid_points = grid.n();

        let norm = Normalizers::new(horizon, alpha, h_alpha)?;
        report.normalizer_a = Some(norm.a);
        report.normalizer_b = Some(norm.b);

        let sim = build_simulator(cfg, &model, &grid, r_mixed)?;
        let maxima = sim.maxima(cfg.reps, seed, absolute);

        let (samples, law): (Vec<f64>, LimitLaw) = match tag {
            Theorem::T22HalfNormal => {
                let rt = model.eval(horizon);
                let loc = (1.0 - rt).sqrt() * norm.b;
                let scale = rt.sqrt();
                (maxima.iter().map(|m| (m - loc) / scale).collect(), LimitLaw::HalfNormal)
            }
            _ => {
                let law = if tag.is_mixed() {
                    LimitLaw::MixedGumbel(r_mixed)
                } else if absolute {
                    LimitLaw::GumbelAbs
                } else {
                    LimitLaw::Gumbel
                };
                (maxima.iter().map(|&m| norm.normalize(m)).collect(), law)
            }
        };
        let ecdf = EmpiricalCdf::new(&samples)?;
        let ks = ks_against(&ecdf, &law);
        report.ks = Some(ks);
        report.law = Some(law.to_string());
        report.rows = cdf_rows(&ecdf, &law);
        if let Some(limit) = gates_cfg.ks_max {
            gate(&mut report.gates, "ks_max", ks, limit, ks <= limit);
        }
        if tag.is_mixed() {
            let wrong = ks_against(&ecdf, &LimitLaw::GumbelAbs);
            report.ks_wrong_law = Some(wrong);
            if gates_cfg.ks_below_wrong_law == Some(true) {
                gate(&mut report.gates, "ks_below_wrong_law", ks, wrong, ks < wrong);
            }
        }
        if tag == Theorem::T22HalfNormal {
            let med = ecdf.median();
            report.median = Some(med);
            if let Some(tol) = gates_cfg.median_tol {
                let dev = (med - HALF_NORMAL_MEDIAN).abs();
                gate(&mut report.gates, "median_tol", dev, tol, dev <= tol);
            }
        }
        if let Some(theta) = cfg.theta {
            let u = solve_threshold(horizon, theta, alpha, h_alpha)?;
            let n = maxima.len() as f64;
            let p_hat = maxima.iter().filter(|&&m| m <= u).count() as f64 / n;
            let p = if tag.is_mixed() {
                lambda_r_cdf(-theta.ln(), r_mixed, DEFAULT_QUAD_ORDER)?
            } else if absolute {
                (-2.0 * theta).exp()
            } else {
                (-theta).exp()
            };
            let se = (p * (1.0 - p) / n).sqrt();
            report.threshold = Some(u);
            report.p_hat = Some(p_hat);
            report.p_theory = Some(p);
            report.p_se = Some(se);
            if let Some(tol) = gates_cfg.p_tol {
                let dev = (p_hat - p).abs();
                let limit = 3.0 * se + tol;
                gate(&mut report.gates, "p_tol", dev, limit, dev <= limit);
            }
            if let Some(min) = gates_cfg.p_min {
                gate(&mut report.gates, "p_min", p_hat, min, p_hat >= min);
            }
        }
        report.samples = samples;
        report.maxima = maxima;
    }
    report.passed = report.gates.iter().all(|g| g.passed);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn run_ratio(
    cfg: &ExperimentConfig,
    model: &CorrelationModel,
    h_alpha: f64,
    seed: u64,
    absolute: bool,
    gates_cfg: &Gates,
    report: &mut ExperimentReport,
) -> Result<()> {
    let (h, u) = (cfg.h.expect("validated"), cfg.u.expect("validated"));
    let step = cfg.grid().step_for(u, model.alpha());
    let grid = GridSpec::new(h, step)?;
    report.horizon = h;
    report.requested_horizon = h;
    report.grid_step = grid.step();
    report.grid_points = grid.n();
    report.threshold = Some(u);
    let sim = build_simulator(cfg, model, &grid, 0.0)?;
    let maxima = sim.maxima(cfg.reps, seed, absolute);
    let n = maxima.len() as f64;
    let p_hat = maxima.iter().filter(|&&m| m > u).count() as f64 / n;
    if p_hat < MIN_EXCEEDANCE {
        return Err(Error::Infeasible(format!(
            "estimated exceedance probability {p_hat:.2e} is below {MIN_EXCEEDANCE:.0e} at {} reps; lower u",
            cfg.reps
        )));
    }
    let sides = if absolute { 2.0 } else { 1.0 };
    let denom = sides * h * mu(u, model.alpha(), h_alpha)?;
    let ratio = p_hat / denom;
    let ci = Z95 * (p_hat * (1.0 - p_hat) / n).sqrt() / denom;
    report.p_hat = Some(p_hat);
    report.p_theory = Some(denom);
    report.p_se = Some((p_hat * (1.0 - p_hat) / n).sqrt());
    report.ratio = Some(ratio);
    report.ratio_ci = Some(ci);
    if let Some(lo) = gates_cfg.ratio_min {
        gate(&mut report.gates, "ratio_min", ratio, lo, ratio >= lo);
    }
    if let Some(hi) = gates_cfg.ratio_max {
        gate(&mut report.gates, "ratio_max", ratio, hi, ratio <= hi);
    }
    report.maxima = maxima;
    Ok(())
}
