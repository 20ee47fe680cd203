//! Normal tail, normalizers, thresholds and the limit laws for maxima.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Probabilities below this are returned as exactly zero.
pub const UNDERFLOW: f64 = 1e-300;
pub const DEFAULT_QUAD_ORDER: usize = 64;
pub const MIN_QUAD_ORDER: usize = 16;

/// Pickands constant H_1.
pub const H_1: f64 = 1.0;
/// Pickands constant H_2 = π^{-1/2}.
pub const H_2: f64 = 0.564_189_583_547_756_3;

/// Closed-form Pickands constants, known only for α ∈ {1, 2}.
pub fn classical_pickands(alpha: f64) -> Option<f64> {
    if alpha == 1.0 {
        Some(H_1)
    } else if alpha == 2.0 {
        Some(H_2)
    } else {
        None
    }
}

fn flush(p: f64) -> f64 {
    if p < UNDERFLOW {
        0.0
    } else {
        p
    }
}

/// Ψ(u) = P(N > u).
pub fn std_normal_survival(u: f64) -> f64 {
    flush(0.5 * libm::erfc(u / SQRT_2))
}

/// Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    flush(0.5 * libm::erfc(-x / SQRT_2))
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, 2], got {alpha}")))
    }
}

fn check_pickands(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(invalid("H_alpha", format!("must be positive and finite, got {h}")))
    }
}

/// Exceedance intensity μ(u) = H_α u^{2/α} Ψ(u).
pub fn mu(u: f64, alpha: f64, h_alpha: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(invalid("u", format!("must be positive, got {u}")));
    }
    check_alpha(alpha)?;
    check_pickands(h_alpha)?;
    Ok(flush(h_alpha * u.powf(2.0 / alpha) * std_normal_survival(u)))
}

/// Scale and location for maxima over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub h_alpha: f64,
}

impl Normalizers {
    pub fn new(horizon: f64, alpha: f64, h_alpha: f64) -> Result<Self> {
        if !(horizon > 1.0) || !horizon.is_finite() {
            return Err(invalid("T", format!("must exceed 1, got {horizon}")));
        }
        check_alpha(alpha)?;
        check_pickands(h_alpha)?;
        let two_log_t = 2.0 * horizon.ln();
        let a = two_log_t.sqrt();
        let inner = h_alpha / (2.0 * PI).sqrt() * two_log_t.powf(-0.5 + 1.0 / alpha);
        let log_term = inner.ln();
        if !log_term.is_finite() {
            return Err(invalid("T", "normalizer log term is not finite"));
        }
        Ok(Self {
            a,
            b: a + log_term / a,
            horizon,
            alpha,
            h_alpha,
        })
    }

    pub fn normalize(&self, max: f64) -> f64 {
        self.a * (max - self.b)
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        x / self.a + self.b
    }
}

pub fn normalizers(horizon: f64, alpha: f64, h_alpha: f64) -> Result<Normalizers> {
    Normalizers::new(horizon, alpha, h_alpha)
}

/// Upper bisection bracket for [`solve_threshold`].
pub const THRESHOLD_UPPER: f64 = 50.0;

/// Solves `T μ(u) = θ` on the decreasing branch `u ≥ √(2/α) + 1`.
pub fn solve_threshold(horizon: f64, theta: f64, alpha: f64, h_alpha: f64) -> Result<f64> {
    if !(horizon > 1.0) {
        return Err(invalid("T", format!("must exceed 1, got {horizon}")));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
    }
    let f = |u: f64| mu(u, alpha, h_alpha).map(|m| horizon * m);
    let mut lo = (2.0 / alpha).sqrt() + 1.0;
    let mut hi = THRESHOLD_UPPER;
    let at_lo = f(lo)?;
    if at_lo < theta {
        return Err(Error::NoSolution {
            theta,
            max_attainable: at_lo,
        });
    }
    let mut best = (lo, (at_lo - theta).abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        let err = (v - theta).abs();
        if err < best.1 {
            best = (mid, err);
        }
        if err <= 1e-12 * theta || mid == lo || mid == hi {
            break;
        }
        if v > theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

/// Λ(x) = exp(−e^{−x}).
pub fn gumbel_cdf(x: f64) -> f64 {
    flush((-(-x).exp()).exp())
}

/// exp(−2e^{−x}).
pub fn gumbel_abs_cdf(x: f64) -> f64 {
    flush((-2.0 * (-x).exp()).exp())
}

/// 2Φ(x) − 1, the law of |W|.
pub fn half_normal_cdf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("half-normal law lives on x >= 0, got {x}")));
    }
    Ok(libm::erf(x / SQRT_2))
}

/// Nodes and weights for ∫ e^{−y²} f(y) dy.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on orthonormal Hermite polynomials.
    pub fn new(order: usize) -> Self {
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let n = order;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 3e-14 {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    /// E f(Z) for standard normal Z.
    pub fn normal_expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f(SQRT_2 * y))
            .sum();
        s / PI.sqrt()
    }
}

fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_QUAD_ORDER))
}

/// Log-drop of the integrand at the outermost node.
const SUPPORT_DROP: f64 = 36.0;

/// Half-width where `z²/2 + 2c(cosh(sz) − 1)` reaches [`SUPPORT_DROP`].
fn effective_support(s: f64, c: f64) -> f64 {
    let g = |z: f64| 0.5 * z * z + 2.0 * c * ((s * z).cosh() - 1.0) - SUPPORT_DROP;
    let (mut lo, mut hi) = (0.0, (2.0 * SUPPORT_DROP).sqrt());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The integrand narrows sharply as `x` decreases, so the nodes are rescaled
/// so that the outermost one lands where it has decayed by `e^{-36}`.
fn lambda_r_with(x: f64, r: f64, rule: &GaussHermite) -> f64 {
    if r == 0.0 {
        return gumbel_abs_cdf(x);
    }
    let s = (2.0 * r).sqrt();
    let c = (-(x + r)).exp();
    let y_max = rule.nodes.iter().cloned().fold(0.0, f64::max);
    let sigma = effective_support(s, c) / (SQRT_2 * y_max);
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&y, &w)| {
            let z = SQRT_2 * sigma * y;
            w * (y * y - 0.5 * z * z - 2.0 * c * (s * z).cosh()).exp()
        })
        .sum();
    flush(sum * sigma / PI.sqrt())
}

/// Λ_r(x) = E Λ(x + r)^{e^{√(2r)W} + e^{−√(2r)W}}.
pub fn lambda_r_cdf(x: f64, r: f64, quad_order: usize) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", format!("must be nonnegative, got {r}")));
    }
    if quad_order < MIN_QUAD_ORDER {
        return Err(invalid("quad_order", format!("must be at least {MIN_QUAD_ORDER}, got {quad_order}")));
    }
    if quad_order == DEFAULT_QUAD_ORDER {
        Ok(lambda_r_with(x, r, default_rule()))
    } else {
        Ok(lambda_r_with(x, r, &GaussHermite::new(quad_order)))
    }
}

/// Reference distributions for normalized maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    Gumbel,
    GumbelAbs,
    MixedGumbel(f64),
    HalfNormal,
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gumbel => gumbel_cdf(x),
            Self::GumbelAbs => gumbel_abs_cdf(x),
            Self::MixedGumbel(r) => lambda_r_with(x, r, default_rule()),
            Self::HalfNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    libm::erf(x / SQRT_2)
                }
            }
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match self {
            Self::HalfNormal => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Parses `gumbel`, `gumbel-abs`, `lambda-r:<r>`, `half-normal`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gumbel" => Ok(Self::Gumbel),
            "gumbel-abs" => Ok(Self::GumbelAbs),
            "half-normal" => Ok(Self::HalfNormal),
            _ => {
                let r = s
                    .strip_prefix("lambda-r:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| invalid("law", format!("unknown law `{s}`")))?;
                if !(r >= 0.0) {
                    return Err(invalid("law", format!("r must be nonnegative, got {r}")));
                }
                Ok(Self::MixedGumbel(r))
            }
        }
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gumbel => write!(f, "gumbel"),
            Self::GumbelAbs => write!(f, "gumbel-abs"),
            Self::MixedGumbel(r) => write!(f, "lambda-r:{r}"),
            Self::HalfNormal => write!(f, "half-normal"),
        }
    }
}
