//! Defect-prediction learners, evaluation measures and the cross-validation harness.

mod cv;
mod forest;
mod gnb;
mod importance;
mod knn;
mod logreg;
mod metrics;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{
    cross_validate, property_matrix, stratified_folds, CvConfig, DatasetRow, EvalReport, FeatureSet,
    LabeledDataset, Measures,
};
pub use forest::{Forest, ForestParams, MaxFeatures};
pub use gnb::{Gnb, DEFAULT_VAR_SMOOTHING};
pub use importance::{feature_importance, forest_importances, FeatureImportance, IMPORTANCE_RUNS};
pub use knn::Knn;
pub use logreg::{Logreg, LogregParams};
pub use metrics::{auc, f_measure, precision, recall, ConfusionCounts, DEFAULT_THRESHOLD};
pub use tree::{Tree, TreeParams};

use crate::error::{Error, Result};
use crate::features::{log_transform, pca_fit, pca_transform, FeatureMatrix, PcaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Cart,
    Knn,
    Logreg,
    Gnb,
    Rf,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Cart,
        LearnerKind::Knn,
        LearnerKind::Logreg,
        LearnerKind::Gnb,
        LearnerKind::Rf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Cart => "cart",
            LearnerKind::Knn => "knn",
            LearnerKind::Logreg => "logreg",
            LearnerKind::Gnb => "gnb",
            LearnerKind::Rf => "rf",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown learner `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyperparameters {
    Cart(TreeParams),
    Knn { k: usize },
    Logreg(LogregParams),
    Gnb { var_smoothing: f64 },
    Rf(ForestParams),
}

impl Hyperparameters {
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Cart => Hyperparameters::Cart(TreeParams::default()),
            LearnerKind::Knn => Hyperparameters::Knn { k: 5 },
            LearnerKind::Logreg => Hyperparameters::Logreg(LogregParams::default()),
            LearnerKind::Gnb => Hyperparameters::Gnb {
                var_smoothing: DEFAULT_VAR_SMOOTHING,
            },
            LearnerKind::Rf => Hyperparameters::Rf(ForestParams::default()),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Hyperparameters::Cart(_) => LearnerKind::Cart,
            Hyperparameters::Knn { .. } => LearnerKind::Knn,
            Hyperparameters::Logreg(_) => LearnerKind::Logreg,
            Hyperparameters::Gnb { .. } => LearnerKind::Gnb,
            Hyperparameters::Rf(_) => LearnerKind::Rf,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Hyperparameters::Cart(t) => t.min_split >= 2 && t.max_features != Some(0),
            Hyperparameters::Knn { k } => *k >= 1,
            Hyperparameters::Logreg(l) => l.l2 >= 0.0 && l.tolerance > 0.0 && l.max_iter >= 1,
            Hyperparameters::Gnb { var_smoothing } => *var_smoothing > 0.0,
            Hyperparameters::Rf(f) => {
                f.n_trees >= 1 && f.min_split >= 2 && f.max_features != MaxFeatures::Count(0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("hyperparameters out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    pub params: Hyperparameters,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        Self {
            params: Hyperparameters::default_for(kind),
            seed,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }
}

/// How raw features are turned into learner inputs; fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreprocessSpec {
    None,
    Log,
    LogPca { variance_target: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessing {
    pub log: bool,
    pub pca: Option<PcaModel>,
    pub col_names: Vec<String>,
}

impl Preprocessing {
    fn fit(spec: PreprocessSpec, x: &FeatureMatrix) -> Result<(Self, FeatureMatrix)> {
        let col_names = x.col_names.clone();
        match spec {
            PreprocessSpec::None => Ok((
                Self {
                    log: false,
                    pca: None,
                    col_names,
                },
                x.clone(),
            )),
            PreprocessSpec::Log => Ok((
                Self {
                    log: true,
                    pca: None,
                    col_names,
                },
                log_transform(x)?,
            )),
            PreprocessSpec::LogPca { variance_target } => {
                let logged = log_transform(x)?;
                let pca = pca_fit(&logged, variance_target)?;
                let projected = pca_transform(&pca, &logged)?;
                Ok((
                    Self {
                        log: true,
                        pca: Some(pca),
                        col_names,
                    },
                    projected,
                ))
            }
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.col_names != self.col_names {
            return Err(Error::DimensionMismatch {
                expected: format!("{} columns", self.col_names.len()),
                got: format!("{} columns", x.col_names.len()),
            });
        }
        let mut out = if self.log { log_transform(x)? } else { x.clone() };
        if let Some(pca) = &self.pca {
            out = pca_transform(pca, &out)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ModelState {
    Constant(f64),
    Tree(Tree),
    Knn(Knn),
    Logreg(Logreg),
    Gnb(Gnb),
    Forest(Forest),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub preprocessing: Preprocessing,
    state: ModelState,
    /// Non-fatal notes from fitting, e.g. a single-class training set.
    pub warnings: Vec<String>,
}

impl TrainedModel {
    pub fn is_constant(&self) -> bool {
        matches!(self.state, ModelState::Constant(_))
    }

    /// Fitted forest, when the learner is `rf` and training saw both classes.
    pub fn forest(&self) -> Option<&Forest> {
        match &self.state {
            ModelState::Forest(f) => Some(f),
            _ => None,
        }
    }
}

/// Fit without preprocessing.
pub fn train(spec: &LearnerSpec, x: &FeatureMatrix, y: &[bool]) -> Result<TrainedModel> {
    train_with(spec, PreprocessSpec::None, x, y)
}

pub fn train_with(
    spec: &LearnerSpec,
    preprocess: PreprocessSpec,
    x: &FeatureMatrix,
    y: &[bool],
) -> Result<TrainedModel> {
    spec.params.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", x.n_rows()),
            got: y.len().to_string(),
        });
    }
    if x.n_rows() < 2 {
        return Err(Error::invalid("training needs at least 2 rows"));
    }
    x.check_finite()?;

    let (preprocessing, features) = Preprocessing::fit(preprocess, x)?;
    let rows: Vec<&[f64]> = features.rows().collect();
    let n_pos = y.iter().filter(|&&v| v).count();
    let single_class = n_pos == 0 || n_pos == y.len();
    let constant = if n_pos == 0 { 0.0 } else { 1.0 };

    let mut warnings = Vec::new();
    let state = match spec.params {
        Hyperparameters::Knn { k } => ModelState::Knn(Knn::fit(&rows, y, k)),
        Hyperparameters::Gnb { .. } if single_class => ModelState::Constant(constant),
        _ if single_class => {
            warnings.push(format!(
                "{}: training data has a single class; predicting {constant} everywhere",
                spec.kind()
            ));
            ModelState::Constant(constant)
        }
        Hyperparameters::Gnb { var_smoothing } => ModelState::Gnb(Gnb::fit(&rows, y, var_smoothing)),
        Hyperparameters::Cart(params) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
            let samples: Vec<usize> = (0..rows.len()).collect();
            ModelState::Tree(Tree::fit(&rows, y, &samples, params, &mut rng))
        }
        Hyperparameters::Logreg(params) => {
            let m = Logreg::fit(&rows, y, &params);
            if !m.converged {
                warnings.push(format!(
                    "logreg: stopped after {} iterations without reaching tolerance {}",
                    m.iterations, params.tolerance
                ));
            }
            ModelState::Logreg(m)
        }
        Hyperparameters::Rf(params) => ModelState::Forest(Forest::fit(&rows, y, &params, spec.seed)),
    };

    Ok(TrainedModel {
        spec: *spec,
        preprocessing,
        state,
        warnings,
    })
}

/// Scores in [0, 1]; higher means more likely defective.
pub fn predict_scores(model: &TrainedModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    x.check_finite()?;
    let features = model.preprocessing.apply(x)?;
    let scores = features
        .rows()
        .map(|row| match &model.state {
            ModelState::Constant(c) => *c,
            ModelState::Tree(t) => t.predict(row),
            ModelState::Knn(k) => k.predict(row),
            ModelState::Logreg(l) => l.predict(row),
            ModelState::Gnb(g) => g.predict(row),
            ModelState::Forest(f) => f.predict(row),
        })
        .collect();
    Ok(scores)
}
