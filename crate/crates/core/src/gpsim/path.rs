use std::io::Write;

use super::grid::GridSpec;
use super::rng::RngStream;
use crate::error::Result;

/// Grid values of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub grid: GridSpec,
    pub stream: RngStream,
}

impl SamplePath {
    /// Writes `t,value` rows with a header, LF line endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.time(i), v)?;
        }
        Ok(())
    }
}

/// Points excluded from maximization; `true` marks a gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapMask(pub Vec<bool>);

impl GapMask {
    pub fn is_excluded(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn included_count(&self) -> usize {
        self.0.iter().filter(|g| !**g).count()
    }
}

/// Maximum of the values (or their absolute values) over unmasked points.
///
/// Returns `-inf` when every point is masked.
pub fn path_max(values: &[f64], absolute: bool, mask: Option<&GapMask>) -> f64 {
    let f = |v: f64| if absolute { v.abs() } else { v };
    match mask {
        None => values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(f(v))),
        Some(mask) => values
            .iter()
            .zip(&mask.0)
            .filter(|(_, gap)| !**gap)
            .fold(f64::NEG_INFINITY, |m, (&v, _)| m.max(f(v))),
    }
}

/// `(max, min)` over unmasked points.
pub fn path_extremes(values: &[f64], mask: Option<&GapMask>) -> (f64, f64) {
    let fold = |(hi, lo): (f64, f64), v: f64| (hi.max(v), lo.min(v));
    let init = (f64::NEG_INFINITY, f64::INFINITY);
    match mask {
        None => values.iter().copied().fold(init, fold),
        Some(mask) => values
            .iter()
            .zip(&mask.0)
            .filter(|(_, gap)| !**gap)
            .map(|(v, _)| *v)
            .fold(init, fold),
    }
}
