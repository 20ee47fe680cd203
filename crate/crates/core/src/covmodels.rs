//! Stationary correlation families and their diagnostics.
//!
//! Three concrete families are shipped:
//!
//! - `Weak(α)`: `r(t) = exp(-|t|^α)`, exponentially decaying, so `r(t)·log t → 0`.
//! - `B1(α, r)`: `r(t) = max(1 - t^α, r / log(e + t))`, with `r(t)·log t → r`.
//! - `B2(α)`: `r(t) = max(1 - t^α, (log(e⁴ + t))^{-1/2})`, with `r(t)·log t → ∞`.
//!
//! The strongly dependent families are pointwise maxima of convex, nonincreasing
//! functions equal to at most 1 at the origin and vanishing at infinity, so they
//! are valid correlation functions by Polya's criterion. That argument needs
//! `1 - t^α` convex, which restricts them to `α ∈ (0, 1]`.
//!
//! User-supplied correlation tables (CSV `lag,value`) cover everything else.

use std::f64::consts::E;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Offset inside the logarithm of the `B2` tail branch. With `e⁴` the tail
/// branch starts at `1/2`, so the local branch `1 - t^α` governs small lags.
pub const B2_LOG_OFFSET: f64 = 54.598_150_033_144_236; // e^4

/// Correlation values on a uniform lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    spacing: f64,
    values: Vec<f64>,
}

impl CorrelationTable {
    /// Builds a table from values at lags `0, spacing, 2·spacing, …`.
    pub fn new(spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        if values.is_empty() {
            return Err(Error::Table("table has no rows".into()));
        }
        if (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Table(format!(
                "value at lag 0 must be 1 within 1e-12, got {}",
                values[0]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Table(format!("non-finite value {v}")));
        }
        Ok(Self { spacing, values })
    }

    /// Parses the `lag,value` CSV format. Lags must start at 0 and be uniformly spaced.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Table("empty input".into()))??;
        if header.trim() != "lag,value" {
            return Err(Error::Table(format!(
                "expected header `lag,value`, found `{}`",
                header.trim()
            )));
        }
        let mut lags = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(lag), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::Table(format!("row {}: expected two fields", i + 2)));
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Table(format!("row {}: {e}", i + 2)))
            };
            lags.push(parse(lag)?);
            values.push(parse(value)?);
        }
        if lags.len() < 2 {
            return Err(Error::Table("need at least two rows".into()));
        }
        if lags[0] != 0.0 {
            return Err(Error::Table(format!("first lag must be 0, got {}", lags[0])));
        }
        let spacing = lags[1] - lags[0];
        for (k, lag) in lags.iter().enumerate() {
            let expected = k as f64 * spacing;
            if (lag - expected).abs() > 1e-9 * expected.abs().max(spacing) {
                return Err(Error::Table(format!(
                    "non-uniform lag spacing at row {}: {lag} vs {expected}",
                    k + 2
                )));
            }
        }
        Self::new(spacing, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest lag covered by the table.
    pub fn extent(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.spacing
    }

    /// Linear interpolation between tabulated lags; zero beyond the last lag.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t.abs() / self.spacing;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return if k + 1 == self.values.len() && x == k as f64 {
                self.values[k]
            } else {
                0.0
            };
        }
        let frac = x - k as f64;
        if frac == 0.0 {
            return self.values[k];
        }
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }
}

/// Which family a model belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Weak,
    B1 { r: f64 },
    B2,
    Table(Arc<CorrelationTable>),
}

/// Dependence regime of a family as designed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Berman,
    StrongFinite,
    StrongInfinite,
    Undetermined,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Berman => "Berman(A3)",
            Regime::StrongFinite => "StrongFinite(B1)",
            Regime::StrongInfinite => "StrongInfinite(B2)",
            Regime::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

/// A stationary correlation function with declared local exponent.
///
/// Local coefficient is fixed at `c = 1`: `1 - r(t) ~ t^α` as `t → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    alpha: f64,
    local_coeff: f64,
    family: Family,
}

fn check_alpha(alpha: f64, upper: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= upper {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, {upper}], got {alpha}")))
    }
}

impl CorrelationModel {
    /// `r(t) = exp(-|t|^α)`, `α ∈ (0, 2]`.
    pub fn weak(alpha: f64) -> Result<Self> {
        check_alpha(alpha, 2.0)?;
        Ok(Self {
            alpha,
            local_coeff: 1.0,
            family: Family::Weak,
        })
    }

    /// `r(t) = max(1 - t^α, r / log(e + t))`, `α ∈ (0, 1]`, `r ∈ (0, 1)`.
    pub fn b1(alpha: f64, r: f64) -> Result<Self> {
        check_alpha(alpha, 1.0)?;
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid("r", format!("must lie in (0, 1), got {r}")));
        }
        Ok(Self {
            alpha,
            local_coeff: 1.0,
            family: Family::B1 { r },
        })
    }

    /// `r(t) = max(1 - t^α, (log(e⁴ + t))^{-1/2})`, `α ∈ (0, 1]`.
    pub fn b2(alpha: f64) -> Result<Self> {
        check_alpha(alpha, 1.0)?;
        Ok(Self {
            alpha,
            local_coeff: 1.0,
            family: Family::B2,
        })
    }

    /// Wraps a user table; `alpha` is the declared local exponent.
    pub fn from_table(table: CorrelationTable, alpha: f64) -> Result<Self> {
        check_alpha(alpha, 2.0)?;
        Ok(Self {
            alpha,
            local_coeff: 1.0,
            family: Family::Table(Arc::new(table)),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn local_coeff(&self) -> f64 {
        self.local_coeff
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Long-range constant `r` of a `B1` model, 0 for every other family.
    pub fn r_target(&self) -> f64 {
        match self.family {
            Family::B1 { r } => r,
            _ => 0.0,
        }
    }

    /// Regime the family was constructed to satisfy, if known.
    pub fn designed_regime(&self) -> Regime {
        match self.family {
            Family::Weak => Regime::Berman,
            Family::B1 { .. } => Regime::StrongFinite,
            Family::B2 => Regime::StrongInfinite,
            Family::Table(_) => Regime::Undetermined,
        }
    }

    /// True for families whose validity as a correlation is known by construction.
    pub fn is_certified(&self) -> bool {
        !matches!(self.family, Family::Table(_))
    }

    /// Largest lag at which the model can be nonzero, if bounded.
    pub fn support(&self) -> Option<f64> {
        match &self.family {
            Family::Table(t) => Some(t.extent()),
            _ => None,
        }
    }

    /// Stable textual description, used for cache keys.
    pub fn descriptor(&self) -> String {
        match &self.family {
            Family::Weak => format!("weak:{:016x}", self.alpha.to_bits()),
            Family::B1 { r } => format!("b1:{:016x}:{:016x}", self.alpha.to_bits(), r.to_bits()),
            Family::B2 => format!("b2:{:016x}", self.alpha.to_bits()),
            Family::Table(t) => {
                let mut s = format!("table:{:016x}:{:016x}", self.alpha.to_bits(), t.spacing.to_bits());
                for v in &t.values {
                    s.push_str(&format!(":{:016x}", v.to_bits()));
                }
                s
            }
        }
    }

    /// Evaluates `r(t)`; negative lags are reflected.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 1.0;
        }
        match &self.family {
            Family::Weak => (-t.powf(self.alpha)).exp(),
            Family::B1 { r } => (1.0 - t.powf(self.alpha)).max(r / (E + t).ln()),
            Family::B2 => (1.0 - t.powf(self.alpha)).max((B2_LOG_OFFSET + t).ln().powf(-0.5)),
            Family::Table(table) => table.eval(t),
        }
    }

    /// `(1 - r(t)) / (c·t^α)`, which tends to 1 as `t → 0`.
    pub fn local_ratio(&self, t: f64) -> f64 {
        let one_minus = match self.family {
            // avoid cancellation in 1 - exp(-x)
            Family::Weak => -(-t.powf(self.alpha)).exp_m1(),
            _ => 1.0 - self.eval(t),
        };
        one_minus / (self.local_coeff * t.powf(self.alpha))
    }

    /// Correlation of the residual process after removing the level `r(T)`:
    /// `(r(t) - r(T)) / (1 - r(T))`.
    pub fn residual_correlation(&self, t: f64, horizon: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(invalid("t", format!("must be nonnegative, got {t}")));
        }
        if t > horizon {
            return Err(invalid("t", format!("{t} exceeds horizon {horizon}")));
        }
        let level = self.eval(horizon);
        if level >= 1.0 {
            return Err(invalid("horizon", "r(T) must be below 1"));
        }
        if t == horizon {
            return Ok(0.0);
        }
        Ok((self.eval(t) - level) / (1.0 - level))
    }

    /// Probes `r(t)·log t` on a geometric grid over `[10, t_max]` and classifies the regime.
    pub fn regime_diagnostics(&self, t_max: f64, n_probes: usize) -> Result<RegimeReport> {
        if !(t_max > 10.0) {
            return Err(invalid("t_max", format!("must exceed 10, got {t_max}")));
        }
        if n_probes < 3 {
            return Err(invalid("n_probes", format!("need at least 3, got {n_probes}")));
        }
        let ratio = t_max / 10.0;
        let probe_values: Vec<(f64, f64)> = (0..n_probes)
            .map(|i| {
                let t = if i + 1 == n_probes {
                    t_max
                } else {
                    10.0 * ratio.powf(i as f64 / (n_probes - 1) as f64)
                };
                (t, self.eval(t) * t.ln())
            })
            .collect();
        Ok(RegimeReport::classify(probe_values))
    }

    /// Checks the Polya conditions on a uniform grid over `[0, t_max]`.
    pub fn validate_polya(&self, grid_step: f64, t_max: f64) -> Result<PolyaReport> {
        if !(grid_step > 0.0) {
            return Err(invalid("grid_step", format!("must be positive, got {grid_step}")));
        }
        if !(t_max >= 2.0 * grid_step) {
            return Err(invalid("t_max", "must cover at least two grid steps"));
        }
        let n = (t_max / grid_step).floor() as usize + 1;
        let values: Vec<f64> = (0..n).map(|k| self.eval(k as f64 * grid_step)).collect();
        Ok(PolyaReport::from_values(grid_step, &values, self.is_certified()))
    }
}

/// Outcome of probing `r(t)·log t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub limit_estimate: f64,
    pub classification: Regime,
    pub probe_values: Vec<(f64, f64)>,
}

impl RegimeReport {
    pub const BERMAN_THRESHOLD: f64 = 0.01;
    pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
    pub const SPREAD_THRESHOLD: f64 = 0.10;
    /// Minimum elasticity `d log(r log t) / d log log t` over the last probes
    /// for a slowly diverging sequence to count as `StrongInfinite`.
    pub const ELASTICITY_THRESHOLD: f64 = 0.1;

    /// Classification from the probe values alone.
    pub fn classify(probe_values: Vec<(f64, f64)>) -> Self {
        let tail = &probe_values[probe_values.len() - 3..];
        let vals: Vec<f64> = tail.iter().map(|p| p.1).collect();
        let limit_estimate = vals.iter().sum::<f64>() / 3.0;
        let increasing = vals[0] < vals[1] && vals[1] < vals[2];
        let elasticity = if vals[0] > 0.0 && vals[2] > 0.0 {
            let dlog_v = (vals[2] / vals[0]).ln();
            let dloglog_t = (tail[2].0.ln() / tail[0].0.ln()).ln();
            dlog_v / dloglog_t
        } else {
            0.0
        };
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = (max - min) / limit_estimate.abs();

        let classification = if limit_estimate.abs() < Self::BERMAN_THRESHOLD {
            Regime::Berman
        } else if increasing
            && (limit_estimate > Self::DIVERGENCE_THRESHOLD
                || elasticity > Self::ELASTICITY_THRESHOLD)
        {
            Regime::StrongInfinite
        } else if limit_estimate > 0.0 && spread < Self::SPREAD_THRESHOLD {
            Regime::StrongFinite
        } else {
            Regime::Undetermined
        };
        Self {
            limit_estimate,
            classification,
            probe_values,
        }
    }
}

/// Which Polya condition failed first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyaViolation {
    Increasing { lag: f64 },
    Concave { lag: f64, second_difference: f64 },
    NegativeTail { value: f64 },
}

/// Verdict of [`CorrelationModel::validate_polya`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyaVerdict {
    /// Nonincreasing, convex, `r(0) = 1`, nonnegative at `t_max`.
    Pass,
    /// Fails a Polya condition but is a candidate correlation (values in `[-1, 1]`,
    /// `r(0) = 1`). Validity is then neither implied nor refuted by the check.
    PolyaInvalid(PolyaViolation),
    /// Not a correlation function at all.
    NotCorrelation { lag: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyaReport {
    pub verdict: PolyaVerdict,
    /// Whether the model is a valid correlation by construction.
    pub certified: bool,
    pub tail_value: f64,
    pub min_second_difference: f64,
}

impl PolyaReport {
    pub const CONVEXITY_TOL: f64 = 1e-10;

    fn from_values(step: f64, values: &[f64], certified: bool) -> Self {
        let tail_value = *values.last().unwrap();
        let min_second_difference = values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(f64::INFINITY, f64::min);

        let not_corr = if (values[0] - 1.0).abs() > 1e-12 {
            Some((0.0, values[0]))
        } else {
            values
                .iter()
                .enumerate()
                .find(|(_, v)| v.abs() > 1.0 + 1e-12)
                .map(|(k, v)| (k as f64 * step, *v))
        };
        let verdict = if let Some((lag, value)) = not_corr {
            PolyaVerdict::NotCorrelation { lag, value }
        } else if let Some(k) = (1..values.len()).find(|&k| values[k] > values[k - 1] + Self::CONVEXITY_TOL) {
            PolyaVerdict::PolyaInvalid(PolyaViolation::Increasing { lag: k as f64 * step })
        } else if let Some((k, d2)) = values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .enumerate()
            .find(|(_, d2)| *d2 < -Self::CONVEXITY_TOL)
        {
            PolyaVerdict::PolyaInvalid(PolyaViolation::Concave {
                lag: (k + 1) as f64 * step,
                second_difference: d2,
            })
        } else if tail_value < -Self::CONVEXITY_TOL {
            PolyaVerdict::PolyaInvalid(PolyaViolation::NegativeTail { value: tail_value })
        } else {
            PolyaVerdict::Pass
        };
        Self {
            verdict,
            certified,
            tail_value,
            min_second_difference,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == PolyaVerdict::Pass
    }
}
