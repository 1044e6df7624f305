use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix with named rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub col_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, col_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != row_ids.len() * col_names.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} x {}", row_ids.len(), col_names.len()),
                got: format!("{} values", values.len()),
            });
        }
        Ok(Self {
            row_ids,
            col_names,
            values,
        })
    }

    /// Build from rows; every row must have `col_names.len()` entries.
    pub fn from_rows(row_ids: Vec<String>, col_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let width = col_names.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: format!("{width} columns"),
                    got: format!("{} in row {i}", r.len()),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(row_ids, col_names, values)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[row * w..(row + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |r| self.row(r))
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            col_names: self.col_names.clone(),
            values,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite {
                row: p / self.n_cols().max(1),
                col: p % self.n_cols().max(1),
            }),
            None => Ok(()),
        }
    }
}

/// `ln(1 + x)` applied cell-wise. Negative cells are rejected.
pub fn log_transform(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        if *v < 0.0 || v.is_nan() {
            let (r, c) = (i / m.n_cols(), i % m.n_cols());
            return Err(Error::NegativeValue {
                row: m.row_ids[r].clone(),
                col: m.col_names[c].clone(),
                value: *v,
            });
        }
        *v = v.ln_1p();
    }
    Ok(out)
}
