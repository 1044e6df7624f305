//! Principal component analysis on standardized columns.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

/// Slack when comparing cumulative explained variance against the target.
const CUMULATIVE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub col_names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// One component per row, row-major, ordered by decreasing eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub k: usize,
}

impl PcaModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn cumulative_ratio(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }
}

pub fn pca_fit(m: &FeatureMatrix, variance_target: f64) -> Result<PcaModel> {
    if m.n_rows() < 2 {
        return Err(Error::invalid("PCA needs at least 2 rows"));
    }
    if m.n_cols() == 0 {
        return Err(Error::invalid("PCA needs at least 1 column"));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::invalid(format!(
            "variance target must be in (0, 1], got {variance_target}"
        )));
    }
    m.check_finite()?;

    let (n, p) = (m.n_rows(), m.n_cols());
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for c in 0..p {
        let col = m.column(c);
        let mu = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        mean[c] = mu;
        if var > 0.0 {
            scale[c] = var.sqrt();
        }
    }

    let z = DMatrix::from_fn(n, p, |r, c| (m.get(r, c) - mean[c]) / scale[c]);
    let cov = (z.transpose() * &z) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Vec::with_capacity(p);
    let mut eigenvalues = Vec::with_capacity(p);
    for &i in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, x)| x)
            .unwrap_or(1.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }

    let total: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio: Vec<f64> = if total > 0.0 {
        eigenvalues.iter().map(|e| e / total).collect()
    } else {
        // every column constant: one component carries the (empty) variance
        (0..p).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
    };

    let mut k = p;
    let mut acc = 0.0;
    for (i, r) in explained_variance_ratio.iter().enumerate() {
        acc += r;
        if acc >= variance_target - CUMULATIVE_SLACK {
            k = i + 1;
            break;
        }
    }

    Ok(PcaModel {
        col_names: m.col_names.clone(),
        mean,
        scale,
        components,
        eigenvalues,
        explained_variance_ratio,
        k,
    })
}

/// Project rows onto the first `k` components, after centering and scaling.
pub fn pca_transform(model: &PcaModel, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if m.col_names != model.col_names {
        return Err(Error::DimensionMismatch {
            expected: model.col_names.join(","),
            got: m.col_names.join(","),
        });
    }
    let p = model.col_names.len();
    let mut values = Vec::with_capacity(m.n_rows() * model.k);
    let mut z = vec![0.0; p];
    for row in m.rows() {
        for c in 0..p {
            z[c] = (row[c] - model.mean[c]) / model.scale[c];
        }
        for comp in &model.components[..model.k] {
            values.push(comp.iter().zip(&z).map(|(a, b)| a * b).sum());
        }
    }
    let names = (1..=model.k).map(|i| format!("pc{i}")).collect();
    FeatureMatrix::new(m.row_ids.clone(), names, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
        FeatureMatrix::from_rows(ids, cols, rows).unwrap()
    }

    fn sample_variance(v: &[f64]) -> f64 {
        let mu = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn perfectly_correlated_columns_need_one_component() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0 * i as f64 + 1.0]).collect();
        let model = pca_fit(&matrix(&rows), 0.95).unwrap();
        assert_eq!(model.k, 1);
        assert!((model.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_variance_independent_columns_need_all() {
        // columns are mutually orthogonal and equally spread
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let model = pca_fit(&matrix(&rows), 0.95).unwrap();
        assert_eq!(model.k, 3);
        for r in &model.explained_variance_ratio {
            assert!((r - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_target_keeps_rank_many() {
        // rank 2: third column = first + second
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let a = (i * i % 7) as f64;
                let b = (i * 3 % 5) as f64;
                vec![a, b, a + b]
            })
            .collect();
        let model = pca_fit(&matrix(&rows), 1.0).unwrap();
        assert_eq!(model.k, 2);
    }

    #[test]
    fn components_orthonormal_and_sign_fixed() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 1.7).sin() * 4.0, t * t / 10.0, (t * 0.3).cos()]
            })
            .collect();
        let model = pca_fit(&matrix(&rows), 0.95).unwrap();
        for (i, a) in model.components.iter().enumerate() {
            for (j, b) in model.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-8);
            }
            let lead = a.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap();
            assert!(lead > 0.0);
        }
        let cum = model.cumulative_ratio();
        assert!(cum.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(cum[model.k - 1] >= 0.95 - 1e-10);
        if model.k > 1 {
            assert!(cum[model.k - 2] < 0.95);
        }
    }

    #[test]
    fn transform_of_training_data_has_eigenvalue_variances() {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 0.9).sin() * 10.0, (t * 2.1).cos() + t / 3.0]
            })
            .collect();
        let m = matrix(&rows);
        let model = pca_fit(&m, 1.0).unwrap();
        let t = pca_transform(&model, &m).unwrap();
        for c in 0..model.k {
            assert!((sample_variance(&t.column(c)) - model.eigenvalues[c]).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 9.0], vec![2.0, 1.0]];
        let m = matrix(&rows);
        let model = pca_fit(&m, 0.95).unwrap();
        let mean_row = matrix(std::slice::from_ref(&model.mean));
        let t = pca_transform(&model, &mean_row).unwrap();
        assert!(t.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn all_components_preserve_standardized_distances() {
        let rows = vec![
            vec![1.0, 5.0, 0.0],
            vec![3.0, 9.0, 1.0],
            vec![2.0, 1.0, 7.0],
            vec![6.0, 2.0, 2.0],
        ];
        let m = matrix(&rows);
        let model = pca_fit(&m, 1.0).unwrap();
        let full = PcaModel { k: 3, ..model.clone() };
        let t = pca_transform(&full, &m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let orig: f64 = (0..3)
                    .map(|c| ((m.get(i, c) - m.get(j, c)) / model.scale[c]).powi(2))
                    .sum();
                let proj: f64 = (0..3).map(|c| (t.get(i, c) - t.get(j, c)).powi(2)).sum();
                assert!((orig.sqrt() - proj.sqrt()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_columns_get_unit_scale() {
        let rows = vec![vec![1.0, 4.0], vec![2.0, 4.0], vec![3.0, 4.0]];
        let model = pca_fit(&matrix(&rows), 0.95).unwrap();
        assert_eq!(model.scale[1], 1.0);
        assert_eq!(model.k, 1);
    }

    #[test]
    fn errors() {
        assert!(pca_fit(&matrix(&[vec![1.0, 2.0]]), 0.95).is_err());
        let m = matrix(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let model = pca_fit(&m, 0.95).unwrap();
        let other = FeatureMatrix::from_rows(vec!["x".into()], vec!["z".into(), "c1".into()], &[vec![0.0, 0.0]]).unwrap();
        assert!(pca_transform(&model, &other).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = matrix(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.5]]);
        let model = pca_fit(&m, 0.95).unwrap();
        assert_eq!(PcaModel::from_json(&model.to_json().unwrap()).unwrap(), model);
    }
}
