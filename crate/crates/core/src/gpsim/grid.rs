use crate::error::{invalid, Result};

/// Uniform time grid `0, Δ, 2Δ, …, (n-1)Δ` covering `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    step: f64,
    n: usize,
}

impl GridSpec {
    /// Grid with `n = floor(T/Δ) + 1` points, so that `(n-1)Δ ≤ T < nΔ`.
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        let mut n = (horizon / step).floor() as usize + 1;
        while n > 1 && (n - 1) as f64 * step > horizon {
            n -= 1;
        }
        while n as f64 * step <= horizon {
            n += 1;
        }
        if n < 2 {
            return Err(invalid("step", format!("grid over [0, {horizon}] with step {step} has fewer than 2 points")));
        }
        Ok(Self { horizon, step, n })
    }

    /// Grid with exactly `n` points; the horizon is `(n-1)Δ`.
    pub fn with_points(n: usize, step: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("need at least 2 points, got {n}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        Ok(Self {
            horizon: (n - 1) as f64 * step,
            step,
            n,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn covers_horizon(horizon in 0.5f64..1e4, step in 1e-3f64..0.25) {
            let g = GridSpec::new(horizon, step).unwrap();
            prop_assert!((g.n() - 1) as f64 * step <= horizon);
            prop_assert!(horizon < g.n() as f64 * step);
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(GridSpec::new(1.0, 2.0).is_err());
        assert!(GridSpec::new(1.0, 0.0).is_err());
        assert_eq!(GridSpec::new(8.0, 1.0).unwrap().n(), 9);
    }
}
