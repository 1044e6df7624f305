use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_samples, StatConfig};
use crate::error::Result;

/// Pooled sizes up to this bound (and free of ties) get an exact p-value.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    /// U for the first sample: pairs with x > y plus half the ties.
    pub u_statistic: f64,
    pub p_value: f64,
    pub reject_null: bool,
    pub exact: bool,
}

/// Ranks of `values` (1-based), ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// One-sided Mann-Whitney U test of "x tends to be larger than y".
pub fn mann_whitney_one_sided(x: &[f64], y: &[f64], cfg: &StatConfig) -> Result<TestResult> {
    check_samples(x, y)?;
    let nx = x.len();
    let ny = y.len();
    let n = nx + ny;

    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_x: f64 = ranks[..nx].iter().sum();
    let u = rank_sum_x - (nx * (nx + 1)) as f64 / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let has_ties = sorted.windows(2).any(|w| w[0] == w[1]);

    let (p_value, exact) = if n <= EXACT_MAX_N && !has_ties {
        (exact_upper_tail(nx, n, rank_sum_x as u64), true)
    } else {
        (normal_upper_tail(u, nx, ny, &pooled), false)
    };

    Ok(TestResult {
        u_statistic: u,
        p_value,
        reject_null: p_value < cfg.alpha,
        exact,
    })
}

/// P(rank sum of a random size-`k` subset of {1..n} >= observed).
fn exact_upper_tail(k: usize, n: usize, observed: u64) -> f64 {
    fn walk(next: u64, n: u64, left: usize, sum: u64, observed: u64, hits: &mut u64, total: &mut u64) {
        if left == 0 {
            *total += 1;
            if sum >= observed {
                *hits += 1;
            }
            return;
        }
        let mut r = next;
        while r + left as u64 - 1 <= n {
            walk(r + 1, n, left - 1, sum + r, observed, hits, total);
            r += 1;
        }
    }
    let (mut hits, mut total) = (0u64, 0u64);
    walk(1, n as u64, k, 0, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

fn normal_upper_tail(u: f64, nx: usize, ny: usize, pooled: &[f64]) -> f64 {
    let (nxf, nyf) = (nx as f64, ny as f64);
    let n = nxf + nyf;
    let mean = nxf * nyf / 2.0;

    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = nxf * nyf / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // every value tied: no evidence either way
        return 1.0;
    }
    let z = (u - mean - 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.sf(z).clamp(0.0, 1.0)
}
