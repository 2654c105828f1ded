//! Random forests and gradient-boosted trees for regression and binary
//! classification, with mean-decrease-impurity importance.

mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::FeatureTable;
use crate::seed;
use tree::{grow, Criterion, Presorted, TreeParams};

pub use tree::{Node, Tree};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TREES: usize = 200;
pub const DEFAULT_GBT_DEPTH: usize = 6;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
/// Clamp for the initial log-odds of a single-class training set.
const PROBABILITY_CLAMP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("column mismatch at position {position}: expected '{expected}', found '{found}'")]
    Schema {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Rf,
    Gbt,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rf => "RF",
            ModelKind::Gbt => "GBT",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RF" => Ok(ModelKind::Rf),
            "GBT" | "XGB" => Ok(ModelKind::Gbt),
            other => Err(format!("unknown model '{other}' (expected RF|GBT)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
}

impl MaxFeatures {
    fn count(self, n_features: usize) -> Option<usize> {
        match self {
            MaxFeatures::All => None,
            MaxFeatures::Sqrt => Some(((n_features as f64).sqrt().floor() as usize).max(1)),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            other => Err(format!("unknown max_features '{other}' (expected all|sqrt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub objective: Objective,
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Shrinkage of boosted trees.
    pub learning_rate: f64,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, objective: Objective, seed: u64) -> Self {
        let (max_depth, max_features) = match (kind, objective) {
            (ModelKind::Rf, Objective::Regression) => (None, MaxFeatures::All),
            (ModelKind::Rf, Objective::Classification) => (None, MaxFeatures::Sqrt),
            (ModelKind::Gbt, _) => (Some(DEFAULT_GBT_DEPTH), MaxFeatures::All),
        };
        Self {
            kind,
            objective,
            n_trees: DEFAULT_TREES,
            max_depth,
            learning_rate: DEFAULT_LEARNING_RATE,
            max_features,
            min_samples_leaf: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_trees == 0 {
            return Err(ModelError::Argument("n_trees must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ModelError::Argument(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(ModelError::Argument("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    format_version: u32,
    pub spec: ModelSpec,
    feature_names: Vec<String>,
    /// Initial score of a boosted model; 0 for forests.
    base_score: f64,
    trees: Vec<Tree>,
    importance: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Trains a model on the rows of `x` against `y`.
pub fn train(spec: &ModelSpec, x: &FeatureTable, y: &[f64]) -> Result<TrainedModel, ModelError> {
    let rows: Vec<&[f64]> = (0..x.n_rows()).map(|i| x.row(i)).collect();
    train_rows(spec, x.names(), &rows, y)
}

/// Trains on row slices directly.
pub fn train_rows(
    spec: &ModelSpec,
    feature_names: &[String],
    rows: &[&[f64]],
    y: &[f64],
) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if rows.len() != y.len() {
        return Err(ModelError::Argument(format!("{} rows but {} labels", rows.len(), y.len())));
    }
    if rows.len() < 2 {
        return Err(ModelError::Argument(format!("need at least 2 rows, got {}", rows.len())));
    }
    let width = feature_names.len();
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(ModelError::Argument(format!("row {i} has {} values for {width} features", rows[i].len())));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::Argument(format!("label {i} is not finite")));
    }
    if spec.objective == Objective::Classification {
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(ModelError::Argument(format!("label {i} = {} is not 0 or 1", y[i])));
        }
    }

    let data = Presorted::new(rows, width);
    let (trees, base_score) = match spec.kind {
        ModelKind::Rf => (train_forest(spec, &data, y), 0.0),
        ModelKind::Gbt => train_boosted(spec, &data, y),
    };

    let mut importance = vec![0.0; width];
    for t in &trees {
        t.accumulate_importance(&mut importance);
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        // averaging over trees cancels in the normalization
        importance.iter_mut().for_each(|v| *v /= total);
    } else {
        importance.iter_mut().for_each(|v| *v = 0.0);
    }

    Ok(TrainedModel {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        feature_names: feature_names.to_vec(),
        base_score,
        trees,
        importance,
    })
}

fn train_forest(spec: &ModelSpec, data: &Presorted, y: &[f64]) -> Vec<Tree> {
    let n = y.len();
    let params = TreeParams {
        criterion: match spec.objective {
            Objective::Regression => Criterion::Variance,
            Objective::Classification => Criterion::Gini,
        },
        max_depth: spec.max_depth,
        min_samples_leaf: spec.min_samples_leaf,
        max_features: spec.max_features.count(data.columns.len()),
    };
    (0..spec.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::mix(spec.seed, t as u64));
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let samples = data.sample_order(&counts);
            grow(data, y, samples, &params, &mut rng)
        })
        .collect()
}

fn train_boosted(spec: &ModelSpec, data: &Presorted, y: &[f64]) -> (Vec<Tree>, f64) {
    let n = y.len();
    let mean = crate::numeric::mean(y);
    let base = match spec.objective {
        Objective::Regression => mean,
        Objective::Classification => {
            let p = mean.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
            (p / (1.0 - p)).ln()
        }
    };
    let params = TreeParams {
        criterion: Criterion::Variance,
        max_depth: spec.max_depth,
        min_samples_leaf: spec.min_samples_leaf,
        max_features: spec.max_features.count(data.columns.len()),
    };
    let all = data.sample_order(&vec![1; n]);
    let mut rng = seed::rng(spec.seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| data.columns.iter().map(|c| c[i]).collect()).collect();
    let mut score = vec![base; n];
    let mut residual = vec![0.0; n];
    let mut trees = Vec::with_capacity(spec.n_trees);
    for _ in 0..spec.n_trees {
        for i in 0..n {
            residual[i] = match spec.objective {
                Objective::Regression => y[i] - score[i],
                Objective::Classification => y[i] - sigmoid(score[i]),
            };
        }
        let tree = grow(data, &residual, all.clone(), &params, &mut rng);
        for (s, row) in score.iter_mut().zip(&rows) {
            *s += spec.learning_rate * tree.predict(row);
        }
        trees.push(tree);
    }
    (trees, base)
}

impl TrainedModel {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    /// Normalized importance per feature, in column order.
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    /// The `k` most important features, descending; ties keep column order.
    pub fn top_features(&self, k: usize) -> Vec<(String, f64)> {
        let mut named = feature_importance(self);
        named.sort_by(|a, b| b.1.total_cmp(&a.1));
        named.truncate(k);
        named
    }

    /// Mean tree output (forests: value or vote fraction) or the additive
    /// boosted score before the link.
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match self.spec.kind {
            ModelKind::Rf => {
                let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
                sum / self.trees.len() as f64
            }
            ModelKind::Gbt => {
                self.base_score
                    + self.spec.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
            }
        }
    }

    /// Class-1 probability of one row.
    pub fn probability_row(&self, x: &[f64]) -> f64 {
        match self.spec.kind {
            ModelKind::Rf => self.score_row(x),
            ModelKind::Gbt => sigmoid(self.score_row(x)),
        }
    }

    /// Regression value, or class label for classifiers.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self.spec.objective {
            Objective::Regression => self.score_row(x),
            Objective::Classification => f64::from(u8::from(self.probability_row(x) > 0.5)),
        }
    }

    pub fn check_schema(&self, names: &[String]) -> Result<(), ModelError> {
        let n = names.len().max(self.feature_names.len());
        for i in 0..n {
            let expected = self.feature_names.get(i);
            let found = names.get(i);
            if expected != found {
                return Err(ModelError::Schema {
                    position: i,
                    expected: expected.cloned().unwrap_or_else(|| "<none>".into()),
                    found: found.cloned().unwrap_or_else(|| "<none>".into()),
                });
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &FeatureTable) -> Result<Vec<f64>, ModelError> {
        self.check_schema(x.names())?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect())
    }

    pub fn predict_proba(&self, x: &FeatureTable) -> Result<Vec<f64>, ModelError> {
        if self.spec.objective != Objective::Classification {
            return Err(ModelError::Argument("probabilities need a classifier".into()));
        }
        self.check_schema(x.names())?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.probability_row(x.row(i)))
            .collect())
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != FORMAT_VERSION {
            return Err(ModelError::Version {
                found: header.format_version,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Importance paired with feature names, in column order.
pub fn feature_importance(model: &TrainedModel) -> Vec<(String, f64)> {
    model
        .feature_names
        .iter()
        .cloned()
        .zip(model.importance.iter().copied())
        .collect()
}
