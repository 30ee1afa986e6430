//! Confusion-matrix metrics, stratified cross-validation over a
//! hyperparameter grid, top-model selection, and the six-experiment
//! cross-dataset evaluation protocol.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{holdout_split, stratified_folds, BinaryDataset, BinaryLabel};
use crate::model::{self, ClassWeights, ClassifierSpec, Family};
use crate::vectorize::{
    encode_count, encode_tfidf, fit_vocabulary_with, Encoding, FeatureMatrix, VectorizerOptions,
    Vocabulary,
};
use crate::{Error, Result};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

/// Counts with Cyberbullying as the positive class.
pub fn confusion(y_true: &[BinaryLabel], y_pred: &[BinaryLabel]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset("evaluation pairs".into()));
    }
    let mut c = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.true_pos += 1,
            (false, true) => c.false_pos += 1,
            (true, false) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class precision/recall/F1 plus the macro and support-weighted means.
/// Zero-denominator precision, recall, or F1 scores as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub f1_macro: f64,
    pub f1_weighted: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(tp: usize, fp: usize, fn_: usize, support: usize) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support,
    }
}

/// The negative class is scored with the roles swapped: its true positives
/// are the positive class's true negatives.
pub fn f1_scores(c: &ConfusionCounts) -> ScoreReport {
    let pos_support = c.true_pos + c.false_neg;
    let neg_support = c.true_neg + c.false_pos;
    let positive = class_metrics(c.true_pos, c.false_pos, c.false_neg, pos_support);
    let negative = class_metrics(c.true_neg, c.false_neg, c.false_pos, neg_support);
    let f1_macro = (positive.f1 + negative.f1) / 2.0;
    let total = pos_support + neg_support;
    let f1_weighted = if total == 0 {
        0.0
    } else {
        (positive.f1 * pos_support as f64 + negative.f1 * neg_support as f64) / total as f64
    };
    ScoreReport {
        positive,
        negative,
        f1_macro,
        f1_weighted,
    }
}

/// cv_mean − cross_score; negative when the model generalized better than
/// its cross-validation estimate.
pub fn drop(cv_mean: f64, cross_score: f64) -> f64 {
    cv_mean - cross_score
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CVResult {
    pub spec_index: usize,
    pub spec: ClassifierSpec,
    pub per_fold_scores: Vec<ScoreReport>,
    pub mean_f1_macro: f64,
    pub std_f1_macro: f64,
    pub mean_f1_weighted: f64,
    pub low_variance_flag: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFailure {
    pub spec_index: usize,
    pub spec: ClassifierSpec,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvRun {
    pub results: Vec<CVResult>,
    pub failures: Vec<SpecFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub vectorizer: VectorizerOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 6,
            holdout_fraction: 0.10,
            seed: 0,
            vectorizer: VectorizerOptions::default(),
        }
    }
}

/// Per-fold fitted state shared by every grid point: the vocabulary and both
/// encodings of the training split, validation fold, and early-stopping
/// holdout, plus class weights from the training split.
struct FoldData {
    x_train: [FeatureMatrix; 2],
    y_train: Vec<BinaryLabel>,
    x_val: [FeatureMatrix; 2],
    y_val: Vec<BinaryLabel>,
    x_holdout: [FeatureMatrix; 2],
    weights: ClassWeights,
}

fn encoding_slot(encoding: Encoding) -> usize {
    match encoding {
        Encoding::Count => 0,
        Encoding::Tfidf => 1,
    }
}

fn encode_both(
    docs: &[crate::corpus::Document],
    vocab: &Vocabulary,
) -> [FeatureMatrix; 2] {
    [encode_count(docs, vocab), encode_tfidf(docs, vocab)]
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified k-fold cross-validation of every spec in the grid. The
/// early-stopping holdout is carved out before fold assignment; per fold,
/// the vectorizer is fitted on the k−1 training folds only. A failing spec
/// is recorded and does not abort the run.
pub fn cross_validate(
    ds: &BinaryDataset,
    grid: &[ClassifierSpec],
    opts: &CvOptions,
) -> Result<CvRun> {
    let (rest, holdout) = holdout_split(ds, opts.holdout_fraction, opts.seed)?;
    let assignment = stratified_folds(&rest, opts.k, opts.seed)?;
    let fold_indices = assignment.fold_indices(&rest);

    let holdout_docs = holdout.documents();
    let y_holdout = holdout.labels();

    let folds: Vec<FoldData> = fold_indices
        .iter()
        .map(|val_idx| {
            let train_idx: Vec<usize> = (0..rest.len())
                .filter(|i| !val_idx.contains(i))
                .collect();
            let train_ds = rest.subset(&train_idx);
            let val_ds = rest.subset(val_idx);
            let vocab = fit_vocabulary_with(&train_ds, &opts.vectorizer)?;
            let weights = ClassWeights::from_labels(&train_ds.labels())?;
            Ok(FoldData {
                x_train: encode_both(&train_ds.documents(), &vocab),
                y_train: train_ds.labels(),
                x_val: encode_both(&val_ds.documents(), &vocab),
                y_val: val_ds.labels(),
                x_holdout: encode_both(&holdout_docs, &vocab),
                weights,
            })
        })
        .collect::<Result<_>>()?;

    let outcomes: Vec<std::result::Result<CVResult, SpecFailure>> = grid
        .par_iter()
        .enumerate()
        .map(|(spec_index, spec)| {
            let run_spec = || -> Result<CVResult> {
                let slot = encoding_slot(spec.vectorizer);
                let mut per_fold_scores = Vec::with_capacity(folds.len());
                for fold in &folds {
                    let model = model::train(
                        &fold.x_train[slot],
                        &fold.y_train,
                        (&fold.x_holdout[slot], &y_holdout),
                        spec,
                        &fold.weights,
                    )?;
                    let preds =
                        model::predict(&model, &fold.x_val[slot], DECISION_THRESHOLD)?;
                    per_fold_scores.push(f1_scores(&confusion(&fold.y_val, &preds)?));
                }
                let macros: Vec<f64> = per_fold_scores.iter().map(|s| s.f1_macro).collect();
                let weighteds: Vec<f64> =
                    per_fold_scores.iter().map(|s| s.f1_weighted).collect();
                let (mean_f1_macro, std_f1_macro) = mean_std(&macros);
                let (mean_f1_weighted, _) = mean_std(&weighteds);
                Ok(CVResult {
                    spec_index,
                    spec: spec.clone(),
                    per_fold_scores,
                    mean_f1_macro,
                    std_f1_macro,
                    mean_f1_weighted,
                    low_variance_flag: std_f1_macro < 0.01,
                })
            };
            run_spec().map_err(|e| SpecFailure {
                spec_index,
                spec: spec.clone(),
                error: e.to_string(),
            })
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(CvRun { results, failures })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopSelection {
    pub selected: Vec<CVResult>,
    /// Set when fewer than the requested n results were available.
    pub underfilled: bool,
}

/// Top-n by mean macro F1, descending; ties break toward lower std, then
/// grid order. With `family` given, selection is restricted to that family.
pub fn select_top(results: &[CVResult], n: usize, family: Option<Family>) -> Result<TopSelection> {
    if n < 1 {
        return Err(Error::InvalidParameter("top n must be >= 1".into()));
    }
    let mut pool: Vec<&CVResult> = results
        .iter()
        .filter(|r| family.map(|f| r.spec.family == f).unwrap_or(true))
        .collect();
    pool.sort_by(|a, b| {
        b.mean_f1_macro
            .total_cmp(&a.mean_f1_macro)
            .then(a.std_f1_macro.total_cmp(&b.std_f1_macro))
            .then(a.spec_index.cmp(&b.spec_index))
    });
    let underfilled = pool.len() < n;
    Ok(TopSelection {
        selected: pool.into_iter().take(n).cloned().collect(),
        underfilled,
    })
}

/// One row of the Table-1 style per-model record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCrossResult {
    pub spec: ClassifierSpec,
    pub cv_mean_f1_macro: f64,
    pub cross_f1_macro: f64,
    pub drop_f1_macro: f64,
    pub cv_mean_f1_weighted: f64,
    pub cross_f1_weighted: f64,
    pub drop_f1_weighted: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment_id: usize,
    pub train_set: String,
    pub test_set: String,
    pub per_model: Vec<ModelCrossResult>,
    pub avg_drop_f1_macro: f64,
    pub avg_drop_f1_weighted: f64,
    /// Top models that failed to refit; excluded from the averages.
    pub failures: Vec<SpecFailure>,
}

/// Refit each top model on the training dataset (minus the early-stopping
/// holdout, which is sourced from the training dataset only) and evaluate
/// it on the entirety of the test dataset, recording drops against the
/// model's cross-validation means.
pub fn cross_dataset_eval(
    experiment_id: usize,
    train_ds: &BinaryDataset,
    test_ds: &BinaryDataset,
    top: &[CVResult],
    opts: &CvOptions,
) -> Result<ExperimentResult> {
    if top.is_empty() {
        return Err(Error::InvalidParameter(
            "cross-dataset evaluation requires a nonempty top-model list".into(),
        ));
    }
    let (rest, holdout) = holdout_split(train_ds, opts.holdout_fraction, opts.seed)?;
    let vocab = fit_vocabulary_with(&rest, &opts.vectorizer)?;
    let weights = ClassWeights::from_labels(&rest.labels())?;
    let x_train = encode_both(&rest.documents(), &vocab);
    let y_train = rest.labels();
    let x_holdout = encode_both(&holdout.documents(), &vocab);
    let y_holdout = holdout.labels();
    let x_test = encode_both(&test_ds.documents(), &vocab);
    let y_test = test_ds.labels();

    let outcomes: Vec<std::result::Result<ModelCrossResult, SpecFailure>> = top
        .par_iter()
        .map(|cv| {
            let run_model = || -> Result<ModelCrossResult> {
                let slot = encoding_slot(cv.spec.vectorizer);
                let model = model::train(
                    &x_train[slot],
                    &y_train,
                    (&x_holdout[slot], &y_holdout),
                    &cv.spec,
                    &weights,
                )?;
                let preds = model::predict(&model, &x_test[slot], DECISION_THRESHOLD)?;
                let scores = f1_scores(&confusion(&y_test, &preds)?);
                Ok(ModelCrossResult {
                    spec: cv.spec.clone(),
                    cv_mean_f1_macro: cv.mean_f1_macro,
                    cross_f1_macro: scores.f1_macro,
                    drop_f1_macro: drop(cv.mean_f1_macro, scores.f1_macro),
                    cv_mean_f1_weighted: cv.mean_f1_weighted,
                    cross_f1_weighted: scores.f1_weighted,
                    drop_f1_weighted: drop(cv.mean_f1_weighted, scores.f1_weighted),
                })
            };
            run_model().map_err(|e| SpecFailure {
                spec_index: cv.spec_index,
                spec: cv.spec.clone(),
                error: e.to_string(),
            })
        })
        .collect();

    let mut per_model = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => per_model.push(r),
            Err(f) => failures.push(f),
        }
    }
    let n = per_model.len().max(1) as f64;
    let avg_drop_f1_macro = per_model.iter().map(|m| m.drop_f1_macro).sum::<f64>() / n;
    let avg_drop_f1_weighted = per_model.iter().map(|m| m.drop_f1_weighted).sum::<f64>() / n;
    Ok(ExperimentResult {
        experiment_id,
        train_set: train_ds.name.clone(),
        test_set: test_ds.name.clone(),
        per_model,
        avg_drop_f1_macro,
        avg_drop_f1_weighted,
        failures,
    })
}

/// Flattened CSV, one row per model per experiment, for external plotting.
pub fn write_experiments_csv<W: Write>(experiments: &[ExperimentResult], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record([
        "experiment_id",
        "train_set",
        "test_set",
        "family",
        "vectorizer",
        "cv_mean_f1_macro",
        "cross_f1_macro",
        "drop_f1_macro",
        "cv_mean_f1_weighted",
        "cross_f1_weighted",
        "drop_f1_weighted",
    ])?;
    for exp in experiments {
        for m in &exp.per_model {
            writer.write_record([
                exp.experiment_id.to_string(),
                exp.train_set.clone(),
                exp.test_set.clone(),
                m.spec.family.to_string(),
                m.spec.vectorizer.to_string(),
                m.cv_mean_f1_macro.to_string(),
                m.cross_f1_macro.to_string(),
                m.drop_f1_macro.to_string(),
                m.cv_mean_f1_weighted.to_string(),
                m.cross_f1_weighted.to_string(),
                m.drop_f1_weighted.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
