//! Empirical distribution functions and Kolmogorov–Smirnov distances.

use crate::error::{invalid, Result};
use crate::limitlaws::LimitLaw;

/// Right-continuous step function `F̂(x) = #{X_i ≤ x} / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("samples", "empty sample"));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(invalid("samples", format!("non-finite value {x}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Sample quantile by the inverse-ECDF rule.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    pub fn median(&self) -> f64 {
        let n = self.len();
        if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            0.5 * (self.sorted[n / 2 - 1] + self.sorted[n / 2])
        }
    }
}

/// `D = max_i max(|i/N − F(x_(i))|, |(i−1)/N − F(x_(i))|)`.
pub fn ks_statistic(ecdf: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = ecdf.len() as f64;
    ecdf.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let i = i as f64;
            ((i + 1.0) / n - f).abs().max((i / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_against(ecdf: &EmpiricalCdf, law: &LimitLaw) -> f64 {
    ks_statistic(ecdf, |x| law.cdf(x))
}

/// Two-sample statistic `sup_x |F̂(x) − Ĝ(x)|`.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value `c(level)·√((n+m)/(nm))` of the two-sample test.
pub fn ks_two_sample_critical(n: usize, m: usize, level: f64) -> f64 {
    let c = (-0.5 * (level / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Dvoretzky–Kiefer–Wolfowitz band `√(log(2/level) / (2N))`.
pub fn dkw_bound(n: usize, level: f64) -> f64 {
    ((2.0 / level).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limitlaws::gumbel_cdf;
    use proptest::prelude::*;

    #[test]
    fn ecdf_steps() {
        let e = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert!((e.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.0), 1.0);
        assert!(EmpiricalCdf::new(&[]).is_err());
        assert!(EmpiricalCdf::new(&[f64::NAN]).is_err());
    }

    #[test]
    fn one_point_sample_against_gumbel() {
        let e = EmpiricalCdf::new(&[0.0]).unwrap();
        let d = ks_against(&e, &LimitLaw::Gumbel);
        assert!((d - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn critical_value_at_one_percent() {
        // c(0.01) = 1.6276
        let c = ks_two_sample_critical(1, 1, 0.01) / 2f64.sqrt();
        assert!((c - 1.627_6).abs() < 1e-4);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = EmpiricalCdf::new(&[1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b = EmpiricalCdf::new(&[10.0, 11.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b), 1.0);
    }

    proptest! {
        #[test]
        fn ks_in_unit_interval(xs in prop::collection::vec(-20.0f64..20.0, 1..200)) {
            let e = EmpiricalCdf::new(&xs).unwrap();
            let d = ks_against(&e, &LimitLaw::GumbelAbs);
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn ks_invariant_under_monotone_map(xs in prop::collection::vec(-3.0f64..5.0, 1..100)) {
            let e = EmpiricalCdf::new(&xs).unwrap();
            let d = ks_statistic(&e, gumbel_cdf);
            let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let ey = EmpiricalCdf::new(&ys).unwrap();
            let dy = ks_statistic(&ey, |y| gumbel_cdf(y.ln()));
            prop_assert!((d - dy).abs() < 1e-12);
        }

        #[test]
        fn ecdf_monotone(xs in prop::collection::vec(-10.0f64..10.0, 1..100), a in -12.0f64..12.0, b in -12.0f64..12.0) {
            let e = EmpiricalCdf::new(&xs).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(e.eval(lo) <= e.eval(hi));
        }
    }
}
