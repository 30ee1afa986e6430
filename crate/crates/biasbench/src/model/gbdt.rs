//! Gradient-boosted regression trees on the weighted logistic loss: exact
//! greedy splits over sparse features, missing values routed to the left
//! child, leaf values -G/(H+λ) with λ = 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;
use crate::vectorize::{FeatureMatrix, SparseVector};
use crate::{Error, Result};

use super::{
    check_training_inputs, sigmoid, weighted_log_loss, ClassWeights, ClassifierSpec,
    EarlyStopping, ModelParameters, TrainedModel,
};

/// Leaf regularization, fixed.
pub const LAMBDA: f64 = 1.0;
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// One regression tree; node 0 is the root. Thresholds are strictly
/// positive, so absent (zero) feature values always route left.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &SparseVector) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row.get(*feature) < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn leaf_score(g: f64, h: f64) -> f64 {
    -g / (h + LAMBDA)
}

fn gain_term(g: f64, h: f64) -> f64 {
    g * g / (h + LAMBDA)
}

/// Exact greedy split search for one node. Candidate thresholds are the
/// midpoints between consecutive distinct present values per feature (the
/// first boundary sits between 0 and the smallest present value); rows
/// without an entry count as missing and stay on the left. Ties in gain
/// break toward the lower feature index, then the lower threshold.
fn best_split(
    rows: &[usize],
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
) -> Option<SplitCandidate> {
    let mut g_node = 0.0;
    let mut h_node = 0.0;
    let mut per_feature: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
    for &r in rows {
        g_node += grad[r];
        h_node += hess[r];
        for (j, v) in x.rows[r].iter() {
            per_feature.entry(j).or_default().push((v, r));
        }
    }
    let parent_term = gain_term(g_node, h_node);
    let node_count = rows.len();

    let mut best: Option<SplitCandidate> = None;
    for (feature, mut entries) in per_feature {
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let present_count = entries.len();
        let mut g_present = 0.0;
        let mut h_present = 0.0;
        for &(_, r) in &entries {
            g_present += grad[r];
            h_present += hess[r];
        }
        let g_missing = g_node - g_present;
        let h_missing = h_node - h_present;
        let missing_count = node_count - present_count;

        // Prefix over present rows in value order; the boundary before group
        // i puts (missing + prefix) left and the rest right.
        let mut g_prefix = 0.0;
        let mut h_prefix = 0.0;
        let mut c_prefix = 0usize;
        let mut i = 0;
        let mut prev_value = 0.0;
        while i < entries.len() {
            let value = entries[i].0;
            let left_count = missing_count + c_prefix;
            let right_count = present_count - c_prefix;
            if left_count > 0 && right_count > 0 {
                let g_left = g_missing + g_prefix;
                let h_left = h_missing + h_prefix;
                let g_right = g_node - g_left;
                let h_right = h_node - h_left;
                let gain =
                    0.5 * (gain_term(g_left, h_left) + gain_term(g_right, h_right) - parent_term);
                let threshold = 0.5 * (prev_value + value);
                if best
                    .as_ref()
                    .map(|b| gain > b.gain)
                    .unwrap_or(gain > MIN_GAIN)
                {
                    best = Some(SplitCandidate {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
            // consume the whole group of equal values
            while i < entries.len() && entries[i].0 == value {
                g_prefix += grad[entries[i].1];
                h_prefix += hess[entries[i].1];
                c_prefix += 1;
                i += 1;
            }
            prev_value = value;
        }
    }
    best.filter(|b| b.gain > MIN_GAIN)
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    max_depth: usize,
    shrinkage: f64,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });

        let split = if depth < self.max_depth && rows.len() >= 2 {
            best_split(&rows, self.x, self.grad, self.hess)
        } else {
            None
        };

        match split {
            Some(cand) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&r| self.x.rows[r].get(cand.feature) < cand.threshold);
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: cand.feature,
                    threshold: cand.threshold,
                    gain: cand.gain,
                    left,
                    right,
                };
            }
            None => {
                let g: f64 = rows.iter().map(|&r| self.grad[r]).sum();
                let h: f64 = rows.iter().map(|&r| self.hess[r]).sum();
                self.nodes[id] = Node::Leaf {
                    value: self.shrinkage * leaf_score(g, h),
                };
            }
        }
        id
    }
}

fn fit_tree(
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    shrinkage: f64,
) -> Tree {
    let mut builder = TreeBuilder {
        x,
        grad,
        hess,
        max_depth,
        shrinkage,
        nodes: Vec::new(),
    };
    builder.build((0..x.n_rows()).collect(), 0);
    Tree {
        nodes: builder.nodes,
    }
}

/// Boosted trees on the weighted logistic loss. The base score is the log
/// of the weighted class-count odds; each round fits one tree to the
/// first/second-order gradient statistics, scaled by the learning rate.
/// Early stopping mirrors the logistic trainer: the returned ensemble is
/// truncated at the best holdout round.
pub fn train_gbdt(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    holdout: (&FeatureMatrix, &[BinaryLabel]),
    spec: &ClassifierSpec,
    weights: &ClassWeights,
) -> Result<TrainedModel> {
    check_training_inputs(x, y, holdout, spec)?;

    let mut pos_weight = 0.0;
    let mut neg_weight = 0.0;
    for &label in y {
        if label.is_positive() {
            pos_weight += weights.weight_of(label);
        } else {
            neg_weight += weights.weight_of(label);
        }
    }
    if pos_weight == 0.0 {
        return Err(Error::ClassAbsent("cyberbullying".into()));
    }
    if neg_weight == 0.0 {
        return Err(Error::ClassAbsent("not_cyberbullying".into()));
    }
    let base_score = (pos_weight / neg_weight).ln();

    let n = x.n_rows();
    let mut train_margins = vec![base_score; n];
    let mut holdout_margins = vec![base_score; holdout.0.n_rows()];

    let baseline = weighted_log_loss(&holdout_margins, holdout.1, weights);
    let mut stopper = EarlyStopping::new(baseline, spec.early_stopping_patience);
    let mut trees: Vec<Tree> = Vec::new();

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for round in 1..=spec.max_rounds {
        for i in 0..n {
            let p = sigmoid(train_margins[i]);
            let c = weights.weight_of(y[i]);
            let target = if y[i].is_positive() { 1.0 } else { 0.0 };
            grad[i] = c * (p - target);
            hess[i] = c * p * (1.0 - p);
        }
        let tree = fit_tree(x, &grad, &hess, spec.max_depth, spec.learning_rate);

        for (margin, row) in train_margins.iter_mut().zip(&x.rows) {
            *margin += tree.predict_row(row);
        }
        for (margin, row) in holdout_margins.iter_mut().zip(&holdout.0.rows) {
            *margin += tree.predict_row(row);
        }
        trees.push(tree);

        if train_margins.iter().any(|m| !m.is_finite()) {
            return Err(Error::Diverged { round });
        }
        let holdout_loss = weighted_log_loss(&holdout_margins, holdout.1, weights);
        if !holdout_loss.is_finite() {
            return Err(Error::Diverged { round });
        }
        stopper.record(round, holdout_loss);
        if stopper.should_stop() {
            break;
        }
    }

    trees.truncate(stopper.best_round);
    Ok(TrainedModel {
        spec: spec.clone(),
        parameters: ModelParameters::Gbdt { base_score, trees },
        rounds_used: stopper.best_round,
        train_history: stopper.history,
        n_features: x.n_columns,
    })
}

/// Exhaustive split-gain oracle used by tests: evaluates every (feature,
/// boundary) pair by brute-force partitioning and returns the maximum gain.
#[doc(hidden)]
pub fn exhaustive_best_gain(
    rows: &[usize],
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
) -> Option<f64> {
    let g_node: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h_node: f64 = rows.iter().map(|&r| hess[r]).sum();
    let parent = gain_term(g_node, h_node);
    let mut best: Option<f64> = None;
    for feature in 0..x.n_columns {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.rows[r].get(feature)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            if threshold <= 0.0 {
                continue;
            }
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            let mut n_left = 0usize;
            for &r in rows {
                if x.rows[r].get(feature) < threshold {
                    g_left += grad[r];
                    h_left += hess[r];
                    n_left += 1;
                }
            }
            if n_left == 0 || n_left == rows.len() {
                continue;
            }
            let gain = 0.5
                * (gain_term(g_left, h_left) + gain_term(g_node - g_left, h_node - h_left)
                    - parent);
            if best.map(|b| gain > b).unwrap_or(true) {
                best = Some(gain);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::tests::{labels, matrix};
    use super::super::{predict, predict_proba, Family};
    use super::*;
    use crate::vectorize::Encoding;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(lr: f64, depth: usize, rounds: usize) -> ClassifierSpec {
        ClassifierSpec {
            family: Family::Gbdt,
            vectorizer: Encoding::Count,
            learning_rate: lr,
            l2_penalty: 0.0,
            max_depth: depth,
            max_rounds: rounds,
            early_stopping_patience: 10,
            seed: 0,
        }
    }

    #[test]
    fn zero_rounds_predicts_base_score() {
        let x = matrix(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let y = labels(&[true, true, false, false]);
        let w = ClassWeights::from_labels(&y).unwrap();
        let model = train_gbdt(&x, &y, (&x, &y), &spec(0.3, 3, 0), &w).unwrap();
        // Balanced weighted classes -> log odds 0 -> probability one half.
        let probs = predict_proba(&model, &x).unwrap();
        assert!(probs.iter().all(|&p| p == 0.5));
        assert_eq!(model.rounds_used, 0);
    }

    #[test]
    fn single_stump_splits_at_separating_threshold() {
        let rows: Vec<Vec<f64>> = (1..=10).map(|v| vec![v as f64]).collect();
        let x = matrix(rows);
        let pattern: Vec<bool> = (1..=10).map(|v| v >= 6).collect();
        let y = labels(&pattern);
        let w = ClassWeights::uniform();
        let mut s = spec(1.0, 1, 1);
        s.early_stopping_patience = 5;
        let model = train_gbdt(&x, &y, (&x, &y), &s, &w).unwrap();
        let trees = match &model.parameters {
            ModelParameters::Gbdt { trees, .. } => trees,
            _ => panic!("wrong family"),
        };
        assert_eq!(trees.len(), 1);
        match &trees[0].nodes[0] {
            Node::Split {
                feature,
                threshold,
                gain,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert!((*threshold - 5.5).abs() < 1e-12);
                // The chosen gain equals the exhaustive-enumeration maximum.
                let grad: Vec<f64> = y
                    .iter()
                    .map(|l| if l.is_positive() { -0.5 } else { 0.5 })
                    .collect();
                let hess = vec![0.25; 10];
                let rows: Vec<usize> = (0..10).collect();
                let oracle = exhaustive_best_gain(&rows, &x, &grad, &hess).unwrap();
                assert!((gain - oracle).abs() < 1e-12);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
        let preds = predict(&model, &x, 0.5).unwrap();
        let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
        assert_eq!(correct, 10);
    }

    #[test]
    fn chosen_split_gains_match_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..30 {
            let n = rng.gen_range(8..=50);
            let d = rng.gen_range(1..=5);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            if rng.gen_bool(0.4) {
                                0.0
                            } else {
                                rng.gen_range(1..6) as f64
                            }
                        })
                        .collect()
                })
                .collect();
            let x = matrix(rows);
            let grad: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hess: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.3)).collect();
            let all_rows: Vec<usize> = (0..n).collect();
            let chosen = best_split(&all_rows, &x, &grad, &hess);
            let oracle = exhaustive_best_gain(&all_rows, &x, &grad, &hess);
            match (chosen, oracle) {
                (Some(c), Some(o)) => {
                    assert!(
                        (c.gain - o).abs() < 1e-12,
                        "trial {trial}: chosen {} vs oracle {o}",
                        c.gain
                    );
                }
                (None, Some(o)) => assert!(o <= MIN_GAIN, "trial {trial}: missed gain {o}"),
                (Some(c), None) => panic!("trial {trial}: spurious split gain {}", c.gain),
                (None, None) => {}
            }
        }
    }

    #[test]
    fn early_stopping_truncates_to_best_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen_range(0..4) as f64).collect())
            .collect();
        let pattern: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let x = matrix(rows);
        let y = labels(&pattern);
        // Random-noise holdout: loss stops improving quickly.
        let hold_rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.gen_range(0..4) as f64).collect())
            .collect();
        let hold_pattern: Vec<bool> = (0..20).map(|_| rng.gen_bool(0.5)).collect();
        let hx = matrix(hold_rows);
        let hy = labels(&hold_pattern);
        let w = ClassWeights::from_labels(&y).unwrap();
        let mut s = spec(0.3, 2, 400);
        s.early_stopping_patience = 5;
        let model = train_gbdt(&x, &y, (&hx, &hy), &s, &w).unwrap();
        assert!(model.rounds_used < 400);
        let min = model
            .train_history
            .iter()
            .cloned()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(model.rounds_used, min.0);
        match &model.parameters {
            ModelParameters::Gbdt { trees, .. } => assert_eq!(trees.len(), model.rounds_used),
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn deterministic_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.gen_range(0..5) as f64).collect())
            .collect();
        let pattern: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let x = matrix(rows);
        let y = labels(&pattern);
        let w = ClassWeights::from_labels(&y).unwrap();
        let s = spec(0.3, 3, 20);
        let a = train_gbdt(&x, &y, (&x, &y), &s, &w).unwrap();
        let b = train_gbdt(&x, &y, (&x, &y), &s, &w).unwrap();
        assert_eq!(
            serde_json::to_string(&a.parameters).unwrap(),
            serde_json::to_string(&b.parameters).unwrap()
        );
    }

    #[test]
    fn missing_values_route_left() {
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    gain: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -1.0 },
                Node::Leaf { value: 1.0 },
            ],
        };
        let missing = SparseVector {
            indices: vec![],
            values: vec![],
        };
        let present = SparseVector {
            indices: vec![0],
            values: vec![2.0],
        };
        assert_eq!(tree.predict_row(&missing), -1.0);
        assert_eq!(tree.predict_row(&present), 1.0);
    }
}
