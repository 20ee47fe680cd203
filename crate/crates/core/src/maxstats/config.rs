//! Strict JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covmodels::{CorrelationModel, CorrelationTable};
use crate::error::{Error, Result};
use crate::limitlaws::classical_pickands;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Weak { alpha: f64 },
    B1 { alpha: f64, r: f64 },
    B2 { alpha: f64 },
    Table { path: PathBuf, alpha: f64 },
}

impl ModelSpec {
    /// Builds the model; table paths are resolved against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<CorrelationModel> {
        match self {
            Self::Weak { alpha } => CorrelationModel::weak(*alpha),
            Self::B1 { alpha, r } => CorrelationModel::b1(*alpha, *r),
            Self::B2 { alpha } => CorrelationModel::b2(*alpha),
            Self::Table { path, alpha } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                CorrelationModel::from_table(CorrelationTable::from_csv_path(full)?, *alpha)
            }
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Weak { alpha } | Self::B1 { alpha, .. } | Self::B2 { alpha } | Self::Table { alpha, .. } => alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "A1-ratio")]
    A1Ratio,
    #[serde(rename = "A2-poisson")]
    A2Poisson,
    #[serde(rename = "A3-degenerate")]
    A3Degenerate,
    #[serde(rename = "A4-gumbel")]
    A4Gumbel,
    #[serde(rename = "T21-gumbel-mixed")]
    T21GumbelMixed,
    #[serde(rename = "T21-poisson")]
    T21Poisson,
    #[serde(rename = "T22-halfnormal")]
    T22HalfNormal,
}

impl Theorem {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::A1Ratio => "A1-ratio",
            Self::A2Poisson => "A2-poisson",
            Self::A3Degenerate => "A3-degenerate",
            Self::A4Gumbel => "A4-gumbel",
            Self::T21GumbelMixed => "T21-gumbel-mixed",
            Self::T21Poisson => "T21-poisson",
            Self::T22HalfNormal => "T22-halfnormal",
        }
    }

    pub fn uses_theta(&self) -> bool {
        matches!(self, Self::A2Poisson | Self::A3Degenerate | Self::T21Poisson)
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, Self::T21GumbelMixed | Self::T21Poisson)
    }

    pub fn is_weak(&self) -> bool {
        matches!(self, Self::A1Ratio | Self::A2Poisson | Self::A3Degenerate | Self::A4Gumbel)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentBackend {
    #[default]
    Auto,
    Circulant,
    Ar1,
    /// Block comparison process (`T21` tags only).
    Comparison,
    /// `(1 − r(T))^{1/2} Y + r(T)^{1/2} W` with `Y` weakly dependent.
    Decomposition,
}

/// Grid step: `q = a·u^{−2/α}` or an explicit `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPolicy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

pub const DEFAULT_GRID_A: f64 = 0.25;

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            a: Some(DEFAULT_GRID_A),
            step: None,
        }
    }
}

impl GridPolicy {
    pub fn step_for(&self, u: f64, alpha: f64) -> f64 {
        match (self.step, self.a) {
            (Some(s), _) => s,
            (None, Some(a)) => a * u.powf(-2.0 / alpha),
            (None, None) => DEFAULT_GRID_A * u.powf(-2.0 / alpha),
        }
    }
}

/// Pass/fail thresholds; every present gate must hold for exit code 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_below_wrong_law: Option<bool>,
    /// `|p̂ − p| ≤ 3·SE + p_tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_max: Option<f64>,
    /// `|median − Φ^{−1}(3/4)| ≤ median_tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_tol: Option<f64>,
}

pub const MIN_REPS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub theorem: Theorem,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridPolicy>,
    pub reps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_sided: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<ExperimentBackend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Gates>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn require(present: bool, key: &str, tag: Theorem) -> Result<()> {
    if present {
        Ok(())
    } else {
        Err(cfg_err(format!("key `{key}` is required for theorem {tag}")))
    }
}

fn forbid(present: bool, key: &str, tag: Theorem) -> Result<()> {
    if present {
        Err(cfg_err(format!("key `{key}` is not used by theorem {tag}")))
    } else {
        Ok(())
    }
}

fn positive(v: Option<f64>, key: &str) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(cfg_err(format!("key `{key}` must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn backend(&self) -> ExperimentBackend {
        self.backend.unwrap_or_default()
    }

    pub fn grid(&self) -> GridPolicy {
        self.grid.unwrap_or_default()
    }

    pub fn one_sided(&self) -> bool {
        self.one_sided.unwrap_or(false)
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Pickands constant for the normalizers: explicit value or the closed form.
    pub fn pickands_constant(&self) -> Result<f64> {
        match self.h_alpha {
            Some(h) => Ok(h),
            None => classical_pickands(self.model.alpha()).ok_or_else(|| {
                cfg_err(format!(
                    "key `h_alpha` is required: no closed-form Pickands constant for alpha = {}",
                    self.model.alpha()
                ))
            }),
        }
    }

    /// Checks that exactly the keys the theorem needs are present.
    pub fn validate(&self) -> Result<()> {
        let tag = self.theorem;
        if self.reps < MIN_REPS {
            return Err(cfg_err(format!("key `reps` must be at least {MIN_REPS}, got {}", self.reps)));
        }
        positive(self.horizon, "T")?;
        positive(self.theta, "theta")?;
        positive(self.h_alpha, "h_alpha")?;
        positive(self.h, "h")?;
        positive(self.u, "u")?;
        if let Some(g) = &self.grid {
            match (g.a, g.step) {
                (Some(_), Some(_)) => return Err(cfg_err("key `grid` takes exactly one of `a` or `step`")),
                (None, None) => return Err(cfg_err("key `grid` needs `a` or `step`")),
                _ => {}
            }
            positive(g.a, "grid.a")?;
            positive(g.step, "grid.step")?;
        }

        if tag == Theorem::A1Ratio {
            forbid(self.horizon.is_some(), "T", tag)?;
            require(self.h.is_some(), "h", tag)?;
            require(self.u.is_some(), "u", tag)?;
        } else {
            require(self.horizon.is_some(), "T", tag)?;
            forbid(self.h.is_some(), "h", tag)?;
            forbid(self.u.is_some(), "u", tag)?;
            if self.horizon.unwrap() <= 1.0 {
                return Err(cfg_err("key `T` must exceed 1"));
            }
        }
        if tag.uses_theta() {
            require(self.theta.is_some(), "theta", tag)?;
        } else {
            forbid(self.theta.is_some(), "theta", tag)?;
        }
        if tag.is_mixed() {
            match (&self.model, self.r) {
                (ModelSpec::B1 { r: model_r, .. }, Some(r)) if r != *model_r => {
                    return Err(cfg_err(format!("key `r` = {r} disagrees with the model's r = {model_r}")));
                }
                (ModelSpec::Table { .. }, None) => {
                    return Err(cfg_err(format!("key `r` is required for theorem {tag} with a table model")));
                }
                _ => {}
            }
            if let Some(r) = self.r {
                if !(r >= 0.0) {
                    return Err(cfg_err(format!("key `r` must be nonnegative, got {r}")));
                }
            }
        } else {
            forbid(self.r.is_some(), "r", tag)?;
        }
        if self.one_sided.is_some() && !tag.is_weak() {
            return Err(cfg_err(format!("key `one_sided` is not supported by theorem {tag}")));
        }

        let backend = self.backend();
        match backend {
            ExperimentBackend::Comparison if !tag.is_mixed() => {
                return Err(cfg_err(format!("key `backend` = comparison is only available for T21 theorems, not {tag}")))
            }
            ExperimentBackend::Decomposition if tag != Theorem::T22HalfNormal => {
                return Err(cfg_err(format!("key `backend` = decomposition is only available for T22-halfnormal, not {tag}")))
            }
            _ => {}
        }
        if backend == ExperimentBackend::Comparison {
            match self.eps {
                Some(e) if e > 0.0 && e < 1.0 => {}
                Some(e) => return Err(cfg_err(format!("key `eps` must lie in (0, 1), got {e}"))),
                None => return Err(cfg_err("key `eps` is required for the comparison backend")),
            }
        } else if self.eps.is_some() {
            return Err(cfg_err("key `eps` is only used by the comparison backend"));
        }

        if let Some(g) = &self.gates {
            if g.ks_below_wrong_law.is_some() && !tag.is_mixed() {
                return Err(cfg_err("key `gates.ks_below_wrong_law` only applies to T21 theorems"));
            }
            if (g.p_tol.is_some() || g.p_min.is_some()) && !tag.uses_theta() {
                return Err(cfg_err(format!("keys `gates.p_tol` / `gates.p_min` do not apply to theorem {tag}")));
            }
            if (g.ratio_min.is_some() || g.ratio_max.is_some()) && tag != Theorem::A1Ratio {
                return Err(cfg_err(format!("keys `gates.ratio_min` / `gates.ratio_max` do not apply to theorem {tag}")));
            }
            if g.median_tol.is_some() && tag != Theorem::T22HalfNormal {
                return Err(cfg_err(format!("key `gates.median_tol` does not apply to theorem {tag}")));
            }
        }
        Ok(())
    }
}
