//! Scott-Knott ranking with an effect-size guard.
//!
//! Treatments are ordered by median (descending). A block is bisected at the
//! cut maximizing the between-group sum of squares of treatment medians; the
//! cut is kept only if the upper half is significantly larger than the lower
//! half (one-sided Mann-Whitney on the pooled scores) and the Cliff's delta
//! between them is not negligible. Accepted halves are split recursively.

use super::{cliffs_delta, mann_whitney_one_sided, median, Magnitude, StatConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SkRanking {
    /// `groups[0]` is rank 1 (best). Names within a group are in median order.
    pub groups: Vec<Vec<String>>,
    /// Median of each treatment, parallel to the flattened `groups`.
    pub medians: Vec<Vec<f64>>,
}

impl SkRanking {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| g.iter().any(|n| n == name))
            .map(|i| i + 1)
    }
}

struct Treatment {
    name: String,
    scores: Vec<f64>,
    median: f64,
}

pub fn scott_knott_esd<I>(treatments: I, cfg: &StatConfig) -> Result<SkRanking>
where
    I: IntoIterator<Item = (String, Vec<f64>)>,
{
    let mut items: Vec<Treatment> = Vec::new();
    for (name, scores) in treatments {
        if scores.is_empty() {
            return Err(Error::invalid(format!("treatment `{name}` has no scores")));
        }
        if scores.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid(format!("treatment `{name}` contains NaN")));
        }
        if items.iter().any(|t| t.name == name) {
            return Err(Error::invalid(format!("duplicate treatment `{name}`")));
        }
        let median = median(&scores);
        items.push(Treatment { name, scores, median });
    }
    if items.is_empty() {
        return Err(Error::invalid("no treatments to rank"));
    }
    items.sort_by(|a, b| b.median.total_cmp(&a.median).then_with(|| a.name.cmp(&b.name)));

    let mut bounds = Vec::new();
    split(&items, 0, items.len(), cfg, &mut bounds)?;

    let mut groups = Vec::with_capacity(bounds.len());
    let mut medians = Vec::with_capacity(bounds.len());
    for (lo, hi) in bounds {
        groups.push(items[lo..hi].iter().map(|t| t.name.clone()).collect());
        medians.push(items[lo..hi].iter().map(|t| t.median).collect());
    }
    Ok(SkRanking { groups, medians })
}

fn split(
    items: &[Treatment],
    lo: usize,
    hi: usize,
    cfg: &StatConfig,
    out: &mut Vec<(usize, usize)>,
) -> Result<()> {
    if hi - lo < 2 {
        out.push((lo, hi));
        return Ok(());
    }
    let block = &items[lo..hi];
    let weight = |ts: &[Treatment]| ts.iter().map(|t| t.scores.len() as f64).sum::<f64>();
    let weighted = |ts: &[Treatment]| {
        ts.iter()
            .map(|t| t.scores.len() as f64 * t.median)
            .sum::<f64>()
    };
    let grand = weighted(block) / weight(block);

    let mut best_cut = 1;
    let mut best_ss = f64::NEG_INFINITY;
    for cut in 1..block.len() {
        let (left, right) = block.split_at(cut);
        let (wl, wr) = (weight(left), weight(right));
        let ml = weighted(left) / wl;
        let mr = weighted(right) / wr;
        let ss = wl * (ml - grand).powi(2) + wr * (mr - grand).powi(2);
        if ss > best_ss {
            best_ss = ss;
            best_cut = cut;
        }
    }

    let (left, right) = block.split_at(best_cut);
    let upper: Vec<f64> = left.iter().flat_map(|t| t.scores.iter().copied()).collect();
    let lower: Vec<f64> = right.iter().flat_map(|t| t.scores.iter().copied()).collect();
    let test = mann_whitney_one_sided(&upper, &lower, cfg)?;
    let effect = cliffs_delta(&upper, &lower)?;

    if test.p_value < cfg.alpha && effect.magnitude != Magnitude::Negligible {
        split(items, lo, lo + best_cut, cfg, out)?;
        split(items, lo + best_cut, hi, cfg, out)
    } else {
        out.push((lo, hi));
        Ok(())
    }
}
