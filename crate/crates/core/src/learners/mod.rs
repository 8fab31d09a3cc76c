//! Classifiers behind a common probability-of-phishing scorer.

mod ensemble;
mod folds;
mod linear;
mod mlp;
mod select;
mod standardize;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};

pub use ensemble::{train_forest, train_gbt, train_gbt_with_history, Ensemble, EnsembleMode, ForestParams, GbtParams, Member};
pub use folds::stratified_folds;
pub use linear::{sigmoid, train_linear, LinearModel, LinearSpec, Loss, Regularization, Solver};
pub use mlp::{bce, train_mlp, Activation, Layer, MlpModel, MlpParams};
pub use select::{average_fold_coefficients, select_features_by_coefficient};
pub use standardize::Standardizer;
pub use tree::{train_tree, DecisionTree, Node, SplitMode, TreeKind, TreeParams};

/// Probability at or above which a sample is labelled phishing.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Version stamped into serialized model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn label_for(probability: f64) -> u8 {
    u8::from(probability >= DECISION_THRESHOLD)
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub folds: usize,
    pub seed: u64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub early_stop_patience: usize,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            max_epochs: 1000,
            learning_rate: 1.0,
            early_stop_patience: 10,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!("folds = {} (need >= 2)", self.folds)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainedModel {
    Linear(LinearModel),
    Tree(DecisionTree),
    Ensemble(Ensemble),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.weights.len(),
            TrainedModel::Tree(m) => m.n_features,
            TrainedModel::Ensemble(m) => m.n_features(),
            TrainedModel::Mlp(m) => m.n_inputs(),
        }
    }

    /// Probability of phishing without a length check.
    pub fn proba(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Linear(m) => m.proba(x),
            TrainedModel::Tree(m) => m.predict_value(x),
            TrainedModel::Ensemble(m) => m.proba(x),
            TrainedModel::Mlp(m) => m.proba(x),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        let expected = self.n_features();
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        Ok(self.proba(x))
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        self.predict_proba(x).map(label_for)
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            TrainedModel::Linear(m) => Some(m),
            _ => None,
        }
    }
}

/// Anything mapping a canonical vector to P(phishing).
pub trait Scorer: Sync {
    fn score(&self, x: &[f64]) -> f64;
}

impl Scorer for TrainedModel {
    fn score(&self, x: &[f64]) -> f64 {
        self.proba(x)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Calls [`TrainedModel::predict_proba`].
pub fn predict_proba(model: &TrainedModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}

/// Named model presets accepted by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Ridge,
    Sgd,
    Elastic,
    Svm,
    Tree,
    Forest,
    Extra,
    Gbt,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Logistic,
        ModelKind::Ridge,
        ModelKind::Sgd,
        ModelKind::Elastic,
        ModelKind::Svm,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Extra,
        ModelKind::Gbt,
        ModelKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Ridge => "ridge",
            ModelKind::Sgd => "sgd",
            ModelKind::Elastic => "elastic",
            ModelKind::Svm => "svm",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Extra => "extra",
            ModelKind::Gbt => "gbt",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Trains the preset on `ds`.
    pub fn train(self, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
        let linear = |spec: LinearSpec| train_linear(ds, &spec, cfg).map(TrainedModel::Linear);
        match self {
            ModelKind::Logistic => linear(LinearSpec::logistic()),
            ModelKind::Ridge => linear(LinearSpec::ridge()),
            ModelKind::Sgd => linear(LinearSpec::sgd()),
            ModelKind::Elastic => linear(LinearSpec::elastic()),
            ModelKind::Svm => linear(LinearSpec::svm()),
            ModelKind::Tree => train_tree(ds, &TreeParams::default(), cfg.seed).map(TrainedModel::Tree),
            ModelKind::Forest => train_forest(ds, &ForestParams::bagging(100), cfg.seed).map(TrainedModel::Ensemble),
            ModelKind::Extra => train_forest(ds, &ForestParams::extra(100), cfg.seed).map(TrainedModel::Ensemble),
            ModelKind::Gbt => train_gbt(ds, &GbtParams::default()).map(TrainedModel::Ensemble),
            ModelKind::Mlp => {
                let params = MlpParams {
                    seed: cfg.seed,
                    patience: cfg.early_stop_patience,
                    ..MlpParams::default()
                };
                train_mlp(ds, &params).map(TrainedModel::Mlp)
            }
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model kind {s:?}")))
    }
}

/// On-disk model document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(kind: ModelKind, feature_names: Vec<String>, model: TrainedModel) -> Self {
        Self {
            version: MODEL_FORMAT_VERSION,
            kind,
            feature_names,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        if file.feature_names.len() != file.model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: file.model.n_features(),
                got: file.feature_names.len(),
            });
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
