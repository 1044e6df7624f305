//! Non-parametric statistics used to validate properties and compare models.

mod cliff;
mod kappa;
mod mann_whitney;
mod scott_knott;

pub use cliff::{cliffs_delta, EffectSize, Magnitude};
pub use kappa::{cohens_kappa, Agreement, Kappa};
pub use mann_whitney::{mann_whitney_one_sided, midranks, TestResult};
pub use scott_knott::{scott_knott_esd, SkRanking};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatConfig {
    pub alpha: f64,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

impl StatConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

/// Median of a non-empty sample; mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub(crate) fn check_samples(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("both samples must be non-empty"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("samples must not contain NaN"));
    }
    Ok(())
}
