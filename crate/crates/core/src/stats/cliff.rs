//! Cliff's delta with the Romano et al. magnitude cut-offs.

use super::check_samples;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(delta: f64) -> Self {
        let d = delta.abs();
        if d > 0.47 {
            Magnitude::Large
        } else if d > 0.33 {
            Magnitude::Medium
        } else if d > 0.14 {
            Magnitude::Small
        } else {
            Magnitude::Negligible
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSize {
    pub delta: f64,
    pub magnitude: Magnitude,
}

/// `(#{x > y} - #{x < y}) / (|x| |y|)` over all cross pairs.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<EffectSize> {
    check_samples(x, y)?;
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);

    let mut dominance: i64 = 0;
    for &xi in x {
        let below = sorted_y.partition_point(|&v| v < xi);
        let not_above = sorted_y.partition_point(|&v| v <= xi);
        let above = sorted_y.len() - not_above;
        dominance += below as i64 - above as i64;
    }
    let delta = dominance as f64 / (x.len() * y.len()) as f64;
    Ok(EffectSize {
        delta,
        magnitude: Magnitude::of(delta),
    })
}
