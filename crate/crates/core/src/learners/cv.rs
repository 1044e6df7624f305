//! Repeated stratified k-fold cross-validation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    auc, f_measure, precision, predict_scores, recall, train_with, ConfusionCounts, LearnerKind,
    LearnerSpec, PreprocessSpec, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Vocabulary, DEFAULT_VARIANCE_TARGET};
use crate::properties::{PropertyRow, PropertyVector, PROPERTY_NAMES};
use crate::stats::median;

/// Redraws allowed per repetition when a training split misses a class.
const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Properties,
    Bow,
}

impl FeatureSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::Properties => "properties",
            FeatureSet::Bow => "bow",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "properties" => Ok(FeatureSet::Properties),
            "bow" => Ok(FeatureSet::Bow),
            _ => Err(Error::invalid(format!("unknown feature set `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub id: String,
    pub properties: Option<PropertyVector>,
    /// Preprocessed bag-of-words tokens.
    pub tokens: Option<Vec<String>>,
    pub defective: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<DatasetRow>,
}

impl LabeledDataset {
    /// Labeled rows only; rows with an empty label are dropped.
    pub fn from_property_rows(rows: &[PropertyRow]) -> Self {
        Self {
            rows: rows
                .iter()
                .filter_map(|r| {
                    r.label.map(|l| DatasetRow {
                        id: r.script_path.clone(),
                        properties: Some(r.vector),
                        tokens: None,
                        defective: l.is_defective(),
                    })
                })
                .collect(),
        }
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.defective).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.rows.iter().filter(|r| r.defective).count();
        (pos, self.rows.len() - pos)
    }
}

/// The twelve property counts of the given rows as a matrix.
pub fn property_matrix<'a, I>(rows: I) -> Result<FeatureMatrix>
where
    I: IntoIterator<Item = &'a DatasetRow>,
{
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for r in rows {
        let v = r
            .properties
            .ok_or_else(|| Error::invalid(format!("row `{}` has no property vector", r.id)))?;
        ids.push(r.id.clone());
        values.extend(v.to_array().iter().map(|&c| c as f64));
    }
    FeatureMatrix::new(ids, PROPERTY_NAMES.iter().map(|s| s.to_string()).collect(), values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub variance_target: f64,
    pub threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            repeats: 10,
            variance_target: DEFAULT_VARIANCE_TARGET,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Measures<T> {
    pub precision: T,
    pub recall: T,
    pub auc: T,
    pub f: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learner: LearnerKind,
    pub features: FeatureSet,
    pub medians: Measures<f64>,
    pub raw: Measures<Vec<f64>>,
    pub seed: u64,
    pub folds: usize,
    pub repeats: usize,
    /// Fold redraws and skipped AUC values; not persisted.
    #[serde(skip)]
    pub events: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn raw_scores(&self, measure: &str) -> Option<&[f64]> {
        match measure {
            "precision" => Some(&self.raw.precision),
            "recall" => Some(&self.raw.recall),
            "auc" => Some(&self.raw.auc),
            "f" => Some(&self.raw.f),
            _ => None,
        }
    }
}

/// Fold index per row: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0; labels.len()];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        assignment[i] = slot % folds;
    }
    assignment
}

fn training_has_both_classes(labels: &[bool], assignment: &[usize], folds: usize) -> bool {
    (0..folds).all(|k| {
        let mut seen = (false, false);
        for (&y, &f) in labels.iter().zip(assignment) {
            if f != k {
                if y {
                    seen.0 = true;
                } else {
                    seen.1 = true;
                }
            }
        }
        seen.0 && seen.1
    })
}

struct FoldOutcome {
    precision: f64,
    recall: f64,
    f: f64,
    auc: Option<f64>,
    warnings: Vec<String>,
}

fn run_fold(
    spec: &LearnerSpec,
    features: FeatureSet,
    data: &LabeledDataset,
    cfg: &CvConfig,
    train: &[usize],
    test: &[usize],
) -> Result<FoldOutcome> {
    let y_train: Vec<bool> = train.iter().map(|&i| data.rows[i].defective).collect();
    let y_test: Vec<bool> = test.iter().map(|&i| data.rows[i].defective).collect();

    let (x_train, x_test, preprocess) = match features {
        FeatureSet::Properties => (
            property_matrix(train.iter().map(|&i| &data.rows[i]))?,
            property_matrix(test.iter().map(|&i| &data.rows[i]))?,
            PreprocessSpec::LogPca {
                variance_target: cfg.variance_target,
            },
        ),
        FeatureSet::Bow => {
            let docs = |idx: &[usize]| -> Result<(Vec<String>, Vec<Vec<String>>)> {
                let mut ids = Vec::with_capacity(idx.len());
                let mut docs = Vec::with_capacity(idx.len());
                for &i in idx {
                    let r = &data.rows[i];
                    let toks = r.tokens.clone().ok_or_else(|| {
                        Error::invalid(format!("row `{}` has no bag-of-words tokens", r.id))
                    })?;
                    ids.push(r.id.clone());
                    docs.push(toks);
                }
                Ok((ids, docs))
            };
            let (train_ids, train_docs) = docs(train)?;
            let (test_ids, test_docs) = docs(test)?;
            let vocab = Vocabulary::fit(train_docs.iter());
            (
                vocab.transform(&train_ids, &train_docs)?,
                vocab.transform(&test_ids, &test_docs)?,
                PreprocessSpec::None,
            )
        }
    };

    let model = train_with(spec, preprocess, &x_train, &y_train)?;
    let scores = predict_scores(&model, &x_test)?;
    let counts = ConfusionCounts::from_scores(&scores, &y_test, cfg.threshold);
    let both = y_test.iter().any(|&y| y) && y_test.iter().any(|&y| !y);
    Ok(FoldOutcome {
        precision: precision(&counts),
        recall: recall(&counts),
        f: f_measure(&counts),
        auc: if both { Some(auc(&scores, &y_test)?) } else { None },
        warnings: model.warnings,
    })
}

/// Repeated stratified cross-validation of one learner on one feature set.
///
/// Repetition `r` shuffles with seed `seed + r`; the learner is seeded the same
/// way. Preprocessing (log + PCA, or the bag-of-words vocabulary) is fitted on
/// the training folds only.
pub fn cross_validate(
    spec: &LearnerSpec,
    features: FeatureSet,
    data: &LabeledDataset,
    cfg: &CvConfig,
    seed: u64,
) -> Result<EvalReport> {
    if cfg.folds < 2 || cfg.repeats < 1 {
        return Err(Error::invalid("need folds >= 2 and repeats >= 1"));
    }
    if data.len() < 20 {
        return Err(Error::invalid(format!(
            "cross-validation needs at least 20 rows, got {}",
            data.len()
        )));
    }
    let (n_pos, n_neg) = data.class_counts();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("dataset has only one label".into()));
    }

    let labels = data.labels();
    let mut events = Vec::new();
    let mut units = Vec::with_capacity(cfg.repeats * cfg.folds);
    for r in 0..cfg.repeats as u64 {
        let rep_seed = seed.wrapping_add(r);
        let mut draw_seed = rep_seed;
        let mut assignment = stratified_folds(&labels, cfg.folds, draw_seed);
        let mut redraws = 0;
        while !training_has_both_classes(&labels, &assignment, cfg.folds) {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::SingleClass(format!(
                    "repetition {r}: no fold assignment leaves both classes in every training split"
                )));
            }
            draw_seed = draw_seed.wrapping_add(cfg.repeats as u64);
            assignment = stratified_folds(&labels, cfg.folds, draw_seed);
        }
        if redraws > 0 {
            events.push(format!("repetition {r}: fold assignment redrawn {redraws} time(s)"));
        }
        let fold_spec = LearnerSpec {
            seed: rep_seed,
            ..*spec
        };
        for k in 0..cfg.folds {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != k).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == k).collect();
            units.push((r, k, fold_spec, train, test));
        }
    }

    let outcomes: Vec<FoldOutcome> = units
        .par_iter()
        .map(|(_, _, s, train, test)| run_fold(s, features, data, cfg, train, test))
        .collect::<Result<_>>()?;

    let mut raw = Measures::<Vec<f64>>::default();
    for ((r, k, ..), o) in units.iter().zip(&outcomes) {
        raw.precision.push(o.precision);
        raw.recall.push(o.recall);
        raw.f.push(o.f);
        match o.auc {
            Some(a) => raw.auc.push(a),
            None => events.push(format!("repetition {r} fold {k}: test fold has one class, AUC skipped")),
        }
        events.extend(o.warnings.iter().map(|w| format!("repetition {r} fold {k}: {w}")));
    }
    if raw.auc.is_empty() {
        return Err(Error::SingleClass("no test fold contained both classes".into()));
    }

    let medians = Measures {
        precision: median(&raw.precision),
        recall: median(&raw.recall),
        auc: median(&raw.auc),
        f: median(&raw.f),
    };
    Ok(EvalReport {
        learner: spec.kind(),
        features,
        medians,
        raw,
        seed,
        folds: cfg.folds,
        repeats: cfg.repeats,
        events,
    })
}
