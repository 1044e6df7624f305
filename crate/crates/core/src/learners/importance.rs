//! Random-forest Gini importance of the source-code properties.

use std::cmp::Ordering;

use super::cv::{property_matrix, LabeledDataset};
use super::forest::{Forest, ForestParams};
use crate::error::{Error, Result};
use crate::features::{log_transform, FeatureMatrix};
use crate::stats::median;

pub const IMPORTANCE_RUNS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    /// `(property, median importance)`, most important first.
    pub ranking: Vec<(String, f64)>,
    /// Raw importance vectors, one per run, in column order.
    pub runs: Vec<Vec<f64>>,
}

impl FeatureImportance {
    /// 1-based rank of `name` in the given run.
    pub fn rank_in_run(&self, run: usize, col_names: &[String], name: &str) -> Option<usize> {
        let col = col_names.iter().position(|c| c == name)?;
        let v = self.runs.get(run)?;
        let order = sort_desc(col_names.iter().cloned().zip(v.iter().copied()).collect());
        order.iter().position(|(n, _)| *n == col_names[col]).map(|p| p + 1)
    }
}

fn sort_desc(mut pairs: Vec<(String, f64)>) -> Vec<(String, f64)> {
    pairs.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    pairs
}

/// Default forests fitted on the whole matrix, run `r` seeded with `seed + r`.
pub fn forest_importances(x: &FeatureMatrix, y: &[bool], runs: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", x.n_rows()),
            got: y.len().to_string(),
        });
    }
    if !(y.iter().any(|&v| v) && y.iter().any(|&v| !v)) {
        return Err(Error::SingleClass("feature importance needs both labels".into()));
    }
    x.check_finite()?;
    let rows: Vec<&[f64]> = x.rows().collect();
    let params = ForestParams::default();
    Ok((0..runs as u64)
        .map(|r| Forest::fit(&rows, y, &params, seed.wrapping_add(r)).feature_importances())
        .collect())
}

/// Ranks the twelve properties by median importance over [`IMPORTANCE_RUNS`]
/// forests trained on log-transformed counts.
pub fn feature_importance(data: &LabeledDataset, seed: u64) -> Result<FeatureImportance> {
    if data.is_empty() {
        return Err(Error::EmptyInput("no labeled scripts".into()));
    }
    let x = log_transform(&property_matrix(&data.rows)?)?;
    let runs = forest_importances(&x, &data.labels(), IMPORTANCE_RUNS, seed)?;
    let ranking = sort_desc(
        x.col_names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let col: Vec<f64> = runs.iter().map(|r| r[j]).collect();
                (name.clone(), median(&col))
            })
            .collect(),
    );
    Ok(FeatureImportance { ranking, runs })
}
