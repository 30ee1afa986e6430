//! Class-weighted L2-regularized logistic regression trained by full-batch
//! gradient descent with early stopping.

use crate::corpus::BinaryLabel;
use crate::vectorize::FeatureMatrix;
use crate::{Error, Result};

use super::{
    check_training_inputs, softplus, weighted_log_loss, ClassWeights, ClassifierSpec,
    EarlyStopping, ModelParameters, TrainedModel,
};

fn signed(label: BinaryLabel) -> f64 {
    if label.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// L(w,b) = Σᵢ cᵢ·ln(1 + exp(−ỹᵢ(w·xᵢ+b))) + (λ/2)‖w‖², with ỹ ∈ {−1,+1}
/// and cᵢ the class weight of row i. The bias is not regularized.
pub fn weighted_logistic_loss(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    weights: &ClassWeights,
    w: &[f64],
    bias: f64,
    l2_penalty: f64,
) -> f64 {
    let mut loss = 0.0;
    for (row, &label) in x.rows.iter().zip(y) {
        let margin = bias + row.iter().map(|(j, v)| w[j] * v).sum::<f64>();
        loss += weights.weight_of(label) * softplus(-signed(label) * margin);
    }
    loss + 0.5 * l2_penalty * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`weighted_logistic_loss`]: returns (∂L/∂w, ∂L/∂b).
pub fn logistic_gradient(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    weights: &ClassWeights,
    w: &[f64],
    bias: f64,
    l2_penalty: f64,
) -> (Vec<f64>, f64) {
    let mut grad_w: Vec<f64> = w.iter().map(|v| l2_penalty * v).collect();
    let mut grad_b = 0.0;
    for (row, &label) in x.rows.iter().zip(y) {
        let margin = bias + row.iter().map(|(j, v)| w[j] * v).sum::<f64>();
        let yt = signed(label);
        // d/dm softplus(-yt*m) = -yt * sigmoid(-yt*m)
        let coeff = weights.weight_of(label) * -yt * super::sigmoid(-yt * margin);
        for (j, v) in row.iter() {
            grad_w[j] += coeff * v;
        }
        grad_b += coeff;
    }
    (grad_w, grad_b)
}

/// Full-batch gradient descent on the weighted loss. Each step is scaled by
/// 1/Σcᵢ so the configured learning rates behave the same across dataset
/// sizes. After each epoch the holdout weighted log-loss is evaluated;
/// training stops after `early_stopping_patience` non-improving epochs and
/// the parameters of the best epoch are returned.
pub fn train_logistic(
    x: &FeatureMatrix,
    y: &[BinaryLabel],
    holdout: (&FeatureMatrix, &[BinaryLabel]),
    spec: &ClassifierSpec,
    weights: &ClassWeights,
) -> Result<TrainedModel> {
    check_training_inputs(x, y, holdout, spec)?;

    let d = x.n_columns;
    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let total_weight: f64 = y.iter().map(|&l| weights.weight_of(l)).sum();
    let step_scale = spec.learning_rate / total_weight;

    let holdout_margins = |w: &[f64], bias: f64| -> Vec<f64> {
        holdout
            .0
            .rows
            .iter()
            .map(|row| bias + row.iter().map(|(j, v)| w[j] * v).sum::<f64>())
            .collect()
    };

    let baseline = weighted_log_loss(&holdout_margins(&w, bias), holdout.1, weights);
    let mut stopper = EarlyStopping::new(baseline, spec.early_stopping_patience);
    let mut best_w = w.clone();
    let mut best_bias = bias;

    for round in 1..=spec.max_rounds {
        let (grad_w, grad_b) = logistic_gradient(x, y, weights, &w, bias, spec.l2_penalty);
        for (wj, gj) in w.iter_mut().zip(&grad_w) {
            *wj -= step_scale * gj;
        }
        bias -= step_scale * grad_b;

        let train_loss = weighted_logistic_loss(x, y, weights, &w, bias, spec.l2_penalty);
        if !train_loss.is_finite() {
            return Err(Error::Diverged { round });
        }
        let holdout_loss = weighted_log_loss(&holdout_margins(&w, bias), holdout.1, weights);
        if !holdout_loss.is_finite() {
            return Err(Error::Diverged { round });
        }
        if stopper.record(round, holdout_loss) {
            best_w.copy_from_slice(&w);
            best_bias = bias;
        }
        if stopper.should_stop() {
            break;
        }
    }

    Ok(TrainedModel {
        spec: spec.clone(),
        parameters: ModelParameters::Logistic {
            weights: best_w,
            bias: best_bias,
        },
        rounds_used: stopper.best_round,
        train_history: stopper.history,
        n_features: d,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{labels, matrix};
    use super::super::{predict, predict_proba, Family};
    use super::*;
    use crate::vectorize::Encoding;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(lr: f64, l2: f64, rounds: usize) -> ClassifierSpec {
        ClassifierSpec {
            family: Family::Logistic,
            vectorizer: Encoding::Count,
            learning_rate: lr,
            l2_penalty: l2,
            max_depth: 1,
            max_rounds: rounds,
            early_stopping_patience: 10,
            seed: 0,
        }
    }

    #[test]
    fn zero_rounds_gives_constant_half() {
        let x = matrix(vec![vec![1.0], vec![-1.0]]);
        let y = labels(&[true, false]);
        let model =
            train_logistic(&x, &y, (&x, &y), &spec(0.5, 0.0, 0), &ClassWeights::uniform())
                .unwrap();
        assert_eq!(model.rounds_used, 0);
        let probs = predict_proba(&model, &x).unwrap();
        assert!(probs.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let mut rows = Vec::new();
        let mut pattern = Vec::new();
        for _ in 0..10 {
            rows.push(vec![1.0]);
            pattern.push(true);
        }
        for _ in 0..10 {
            rows.push(vec![-1.0]);
            pattern.push(false);
        }
        let x = matrix(rows);
        let y = labels(&pattern);
        let model =
            train_logistic(&x, &y, (&x, &y), &spec(0.5, 0.0, 200), &ClassWeights::uniform())
                .unwrap();
        let preds = predict(&model, &x, 0.5).unwrap();
        let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
        assert_eq!(correct, 20);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let x = matrix(rows);
            let pattern: Vec<bool> = (0..5).map(|_| rng.gen_bool(0.5)).collect();
            if pattern.iter().all(|&p| p) || pattern.iter().all(|&p| !p) {
                continue;
            }
            let y = labels(&pattern);
            let weights = ClassWeights::from_labels(&y).unwrap();
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias = rng.gen_range(-1.0..1.0);
            let l2 = 0.3;

            let (grad_w, grad_b) = logistic_gradient(&x, &y, &weights, &w, bias, l2);
            let eps = 1e-5;
            for j in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += eps;
                wm[j] -= eps;
                let fd = (weighted_logistic_loss(&x, &y, &weights, &wp, bias, l2)
                    - weighted_logistic_loss(&x, &y, &weights, &wm, bias, l2))
                    / (2.0 * eps);
                let rel = (grad_w[j] - fd).abs() / grad_w[j].abs().max(fd.abs()).max(1.0);
                assert!(rel < 1e-5, "w[{j}]: analytic {} vs fd {fd}", grad_w[j]);
            }
            let fd_b = (weighted_logistic_loss(&x, &y, &weights, &w, bias + eps, l2)
                - weighted_logistic_loss(&x, &y, &weights, &w, bias - eps, l2))
                / (2.0 * eps);
            let rel = (grad_b - fd_b).abs() / grad_b.abs().max(fd_b.abs()).max(1.0);
            assert!(rel < 1e-5);
        }
    }

    #[test]
    fn divergent_learning_rate_reports_error() {
        // Conflicting points at extreme feature scale: the oversized step
        // drives the margins of the mixed row to inf - inf = NaN.
        let f = 1e155;
        let x = matrix(vec![vec![f, 0.0], vec![0.0, f], vec![f, f]]);
        let y = labels(&[true, false, false]);
        let result = train_logistic(
            &x,
            &y,
            (&x, &y),
            &spec(1e12, 0.0, 50),
            &ClassWeights::uniform(),
        );
        assert!(matches!(result, Err(Error::Diverged { .. })));
    }

    #[test]
    fn unweighted_equals_unit_weighted_loss() {
        let x = matrix(vec![vec![1.0, 0.5], vec![-0.5, 1.0], vec![0.0, -1.0]]);
        let y = labels(&[true, false, false]);
        let w = vec![0.3, -0.7];
        let uniform = ClassWeights::uniform();
        let manual: f64 = x
            .rows
            .iter()
            .zip(&y)
            .map(|(row, &label)| {
                let m = 0.1 + row.iter().map(|(j, v)| w[j] * v).sum::<f64>();
                softplus(-signed(label) * m)
            })
            .sum();
        let loss = weighted_logistic_loss(&x, &y, &uniform, &w, 0.1, 0.0);
        assert!((loss - manual).abs() < 1e-15);
    }

    #[test]
    fn early_stopping_returns_best_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let pattern: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let x = matrix(rows);
        let y = labels(&pattern);
        let hold_rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let hold_y = labels(&(0..10).map(|i| i % 2 == 0).collect::<Vec<_>>());
        let hx = matrix(hold_rows);
        let model = train_logistic(
            &x,
            &y,
            (&hx, &hold_y),
            &spec(0.3, 0.0, 100),
            &ClassWeights::uniform(),
        )
        .unwrap();
        let min = model
            .train_history
            .iter()
            .cloned()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(model.rounds_used, min.0);
    }

    #[test]
    fn identical_inputs_bit_identical_parameters() {
        let x = matrix(vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -2.0], vec![2.0, 1.0]]);
        let y = labels(&[true, false, false, true]);
        let s = spec(0.2, 0.1, 60);
        let w = ClassWeights::from_labels(&y).unwrap();
        let a = train_logistic(&x, &y, (&x, &y), &s, &w).unwrap();
        let b = train_logistic(&x, &y, (&x, &y), &s, &w).unwrap();
        match (&a.parameters, &b.parameters) {
            (
                ModelParameters::Logistic { weights: wa, bias: ba },
                ModelParameters::Logistic { weights: wb, bias: bb },
            ) => {
                assert_eq!(wa, wb);
                assert_eq!(ba, bb);
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn probability_monotone_in_margin() {
        let model = TrainedModel {
            spec: spec(0.1, 0.0, 0),
            parameters: ModelParameters::Logistic {
                weights: vec![1.0],
                bias: 0.0,
            },
            rounds_used: 0,
            train_history: vec![],
            n_features: 1,
        };
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let x = matrix(xs.iter().map(|&v| vec![v]).collect());
        let probs = predict_proba(&model, &x).unwrap();
        for pair in probs.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }
}
