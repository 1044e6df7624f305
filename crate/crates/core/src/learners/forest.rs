use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(&self, n_features: usize) -> Option<usize> {
        match *self {
            MaxFeatures::All => None,
            MaxFeatures::Sqrt => Some(((n_features as f64).sqrt().floor() as usize).max(1)),
            MaxFeatures::Count(c) => Some(c.clamp(1, n_features.max(1))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(rows: &[&[f64]], labels: &[bool], params: &ForestParams, seed: u64) -> Self {
        let n = rows.len();
        let n_features = rows.first().map_or(0, |r| r.len());
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_split: params.min_split,
            max_features: params.max_features.resolve(n_features),
        };
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();

        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(rows, labels, &samples, tree_params, &mut rng)
            })
            .collect();
        Self { trees }
    }

    /// Mean of the trees' leaf positive fractions.
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Per-tree normalized Gini importances, averaged and renormalized to sum to 1.
    /// Trees that never split are left out. All zeros if no tree split.
    pub fn feature_importances(&self) -> Vec<f64> {
        let n_features = self.trees.first().map_or(0, |t| t.impurity_decrease().len());
        let mut acc = vec![0.0; n_features];
        for t in &self.trees {
            let total: f64 = t.impurity_decrease().iter().sum();
            if total > 0.0 {
                for (a, d) in acc.iter_mut().zip(t.impurity_decrease()) {
                    *a += d / total;
                }
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}
