//! Classifier contract plus two reference implementations: class-weighted
//! logistic regression and depth-limited gradient-boosted trees, both with
//! early stopping on a holdout slice.

mod gbdt;
mod logistic;

pub use gbdt::{exhaustive_best_gain, train_gbdt, Node, Tree};
pub use logistic::{logistic_gradient, train_logistic, weighted_logistic_loss};

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryDataset, BinaryLabel};
use crate::vectorize::{Encoding, FeatureMatrix};
use crate::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    Gbdt,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Logistic => f.write_str("logistic"),
            Family::Gbdt => f.write_str("gbdt"),
        }
    }
}

/// One point of the hyperparameter grid. `l2_penalty` applies to the
/// logistic family only and `max_depth` to the gbdt family only; each
/// family ignores the other's field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub family: Family,
    pub vectorizer: Encoding,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_depth: usize,
    pub max_rounds: usize,
    pub early_stopping_patience: usize,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l2_penalty must be nonnegative, got {}",
                self.l2_penalty
            )));
        }
        if self.family == Family::Gbdt && self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.early_stopping_patience < 1 {
            return Err(Error::InvalidParameter(
                "early_stopping_patience must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Short human-readable tag for reports.
    pub fn tag(&self) -> String {
        match self.family {
            Family::Logistic => format!(
                "logistic/{}/lr{}/l2{}",
                self.vectorizer, self.learning_rate, self.l2_penalty
            ),
            Family::Gbdt => format!(
                "gbdt/{}/lr{}/depth{}",
                self.vectorizer, self.learning_rate, self.max_depth
            ),
        }
    }
}

/// Loss weights per class; the positive class carries the negative/positive
/// count ratio of the training portion, the negative class is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive_weight: f64,
    pub negative_weight: f64,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights {
            positive_weight: 1.0,
            negative_weight: 1.0,
        }
    }

    pub fn from_labels(labels: &[BinaryLabel]) -> Result<Self> {
        let n_pos = labels.iter().filter(|l| l.is_positive()).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 {
            return Err(Error::ClassAbsent("cyberbullying".into()));
        }
        if n_neg == 0 {
            return Err(Error::ClassAbsent("not_cyberbullying".into()));
        }
        Ok(ClassWeights {
            positive_weight: n_neg as f64 / n_pos as f64,
            negative_weight: 1.0,
        })
    }

    pub fn weight_of(&self, label: BinaryLabel) -> f64 {
        if label.is_positive() {
            self.positive_weight
        } else {
            self.negative_weight
        }
    }
}

/// positive_weight = N_neg / N_pos on the given training data.
pub fn compute_class_weights(train: &BinaryDataset) -> Result<ClassWeights> {
    ClassWeights::from_labels(&train.labels())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParameters {
    Logistic { weights: Vec<f64>, bias: f64 },
    Gbdt { base_score: f64, trees: Vec<Tree> },
}

/// A fitted classifier: parameters from the best early-stopping round plus
/// the holdout-loss history that selected it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub parameters: ModelParameters,
    pub rounds_used: usize,
    /// (round, holdout loss) per evaluated round; round 0 is the untrained
    /// baseline.
    pub train_history: Vec<(usize, f64)>,
    pub n_features: usize,
}

impl TrainedModel {
    pub fn margins(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.n_columns != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                actual: x.n_columns,
            });
        }
        let margins = match &self.parameters {
            ModelParameters::Logistic { weights, bias } => x
                .rows
                .iter()
                .map(|row| bias + row.iter().map(|(j, v)| weights[j] * v).sum::<f64>())
                .collect(),
            ModelParameters::Gbdt { base_score, trees } => x
                .rows
                .iter()
                .map(|row| base_score + trees.iter().map(|t| t.predict_row(row)).sum::<f64>())
                .collect(),
        };
        Ok(margins)
    }

    /// Versioned JSON document for reuse across pipeline stages.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Versioned<'a> {
            schema_version: u32,
            model: &'a TrainedModel,
        }
        Ok(serde_json::to_string_pretty(&Versioned {
            schema_version: MODEL_SCHEMA_VERSION,
            model: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        #[derive(Deserialize)]
        struct Versioned {
            schema_version: u32,
            model: TrainedModel,
        }
        let v: Versioned = serde_json::from_str(text)?;
        if v.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported model schema version {}",
                v.schema_version
            )));
        }
        Ok(v.model)
    }
}

pub const PROBABILITY_CLAMP: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Sigmoid of the margin, clamped into (1e-12, 1 - 1e-12).
pub fn predict_proba(model: &TrainedModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    Ok(model
        .margins(x)?
        .into_iter()
        .map(|m| sigmoid(m).clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP))
        .collect())
}

/// Probability >= threshold predicts the positive class.
pub fn predict(
    model: &TrainedModel,
    x: &FeatureMatrix,
    threshold: f64,
) -> Result<Vec<BinaryLabel>> {
    Ok(predict_proba(model, x)?
        .into_iter()
        .map(|p| {
            if p >= threshold {
                BinaryLabel::Cyberbullying
            } else {
                BinaryLabel::NotCyberbullying
            }
        })
        .collect())
}

/// Dispatch on the spec's family.
pub fn train(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    holdout: (&FeatureMatrix, &[BinaryLabel]),
    spec: &ClassifierSpec,
    weights: &ClassWeights,
) -> Result<TrainedModel> {
    match spec.family {
        Family::Logistic => train_logistic(x, y, holdout, spec, weights),
        Family::Gbdt => train_gbdt(x, y, holdout, spec, weights),
    }
}

/// Weighted mean log-loss of clamped sigmoid probabilities; the early
/// stopping criterion for both families.
pub fn weighted_log_loss(margins: &[f64], y: &[BinaryLabel], weights: &ClassWeights) -> f64 {
    let mut loss = 0.0;
    let mut total = 0.0;
    for (&m, &label) in margins.iter().zip(y) {
        let p = sigmoid(m).clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
        let c = weights.weight_of(label);
        loss -= c * if label.is_positive() { p.ln() } else { (1.0 - p).ln() };
        total += c;
    }
    if total > 0.0 {
        loss / total
    } else {
        0.0
    }
}

pub(crate) fn check_training_inputs(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    holdout: (&FeatureMatrix, &[BinaryLabel]),
    spec: &ClassifierSpec,
) -> Result<()> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset("training matrix".into()));
    }
    if holdout.0.n_rows() != holdout.1.len() {
        return Err(Error::LengthMismatch {
            left: holdout.0.n_rows(),
            right: holdout.1.len(),
        });
    }
    if holdout.0.n_rows() == 0 {
        return Err(Error::EmptyDataset("early-stopping holdout".into()));
    }
    if holdout.0.n_columns != x.n_columns {
        return Err(Error::WidthMismatch {
            expected: x.n_columns,
            actual: holdout.0.n_columns,
        });
    }
    Ok(())
}

/// Shared early-stopping bookkeeping: tracks the best holdout loss and
/// signals a stop after `patience` consecutive non-improving rounds.
pub(crate) struct EarlyStopping {
    pub best_round: usize,
    pub best_loss: f64,
    patience: usize,
    non_improving: usize,
    pub history: Vec<(usize, f64)>,
}

impl EarlyStopping {
    pub fn new(baseline_loss: f64, patience: usize) -> Self {
        EarlyStopping {
            best_round: 0,
            best_loss: baseline_loss,
            patience,
            non_improving: 0,
            history: vec![(0, baseline_loss)],
        }
    }

    /// Record a round's holdout loss; returns true when the round improved
    /// on the best seen so far.
    pub fn record(&mut self, round: usize, loss: f64) -> bool {
        self.history.push((round, loss));
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_round = round;
            self.non_improving = 0;
            true
        } else {
            self.non_improving += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.non_improving >= self.patience
    }
}
