//! Hypergeometric expansion-contamination expectation, rank transforms, and
//! Kendall-Tau-b / Spearman correlations with two-sided p-values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::util::derive_seed;
use crate::{Error, Result};

/// Below this length, p-values come from exhaustive enumeration of the
/// distinct arrangements of `y` instead of the asymptotic approximations,
/// which are badly calibrated at such sizes.
const EXACT_PERMUTATION_MAX_N: usize = 9;

/// Per-label inputs of the contamination estimator: `draws` sampled without
/// replacement from `total` items of which `dqe_count` originate from
/// expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDraw {
    pub label: String,
    pub draws: u64,
    pub dqe_count: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelExpectation {
    pub label: String,
    pub draws: u64,
    pub dqe_count: u64,
    pub total: u64,
    pub expected: f64,
}

/// E_l[S] = n·|S_l|/N_l per label; the total is the sum over labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DQEEstimate {
    pub per_label: Vec<LabelExpectation>,
    pub total_expected: f64,
}

fn validate_draw(d: &LabelDraw) -> Result<()> {
    if d.dqe_count > d.total {
        return Err(Error::InvalidParameter(format!(
            "label {}: dqe_count {} exceeds total {}",
            d.label, d.dqe_count, d.total
        )));
    }
    if d.draws > d.total {
        return Err(Error::InvalidParameter(format!(
            "label {}: draws {} exceed total {}",
            d.label, d.draws, d.total
        )));
    }
    Ok(())
}

/// Hypergeometric means, exactly n·|S_l|/N_l per label.
pub fn expected_dqe_samples(per_label: &[LabelDraw]) -> Result<DQEEstimate> {
    let mut rows = Vec::with_capacity(per_label.len());
    let mut total_expected = 0.0;
    for d in per_label {
        validate_draw(d)?;
        let expected = if d.total == 0 {
            0.0
        } else {
            d.draws as f64 * d.dqe_count as f64 / d.total as f64
        };
        total_expected += expected;
        rows.push(LabelExpectation {
            label: d.label.clone(),
            draws: d.draws,
            dqe_count: d.dqe_count,
            total: d.total,
            expected,
        });
    }
    Ok(DQEEstimate {
        per_label: rows,
        total_expected,
    })
}

/// Monte Carlo validator: simulates the without-replacement draws and
/// returns the empirical mean count of expansion-origin items. Each trial
/// uses a derived seed, so the result does not depend on execution order.
pub fn monte_carlo_dqe(per_label: &[LabelDraw], trials: u64, seed: u64) -> Result<f64> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    for d in per_label {
        validate_draw(d)?;
    }
    let mut sum = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, trial));
        let mut count = 0u64;
        for d in per_label {
            let mut remaining_dqe = d.dqe_count;
            let mut remaining_total = d.total;
            for _ in 0..d.draws {
                if rng.gen_range(0..remaining_total) < remaining_dqe {
                    count += 1;
                    remaining_dqe -= 1;
                }
                remaining_total -= 1;
            }
        }
        sum += count as f64;
    }
    Ok(sum / trials as f64)
}

/// Average-rank transform; ties share the mean of their rank positions.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold equal values; average of 1-based ranks
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    KendallTauB,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: CorrelationMethod,
}

fn check_paired(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min_n {
        return Err(Error::InvalidParameter(format!(
            "need at least {min_n} observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in correlation input".into()));
    }
    Ok(())
}

/// Tie statistics over a sorted run structure: (Σt(t−1)/2, Σt(t−1)(2t+5),
/// Σt(t−1)(t−2)) for the tie-group sizes t.
fn tie_terms(sorted: &[f64]) -> (f64, f64, f64) {
    let mut pairs = 0.0;
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        pairs += t * (t - 1.0) / 2.0;
        v1 += t * (t - 1.0) * (2.0 * t + 5.0);
        v2 += t * (t - 1.0) * (t - 2.0);
        i = j + 1;
    }
    (pairs, v1, v2)
}

/// Merge sort counting strict inversions.
fn count_inversions(values: &mut Vec<f64>) -> u64 {
    let n = values.len();
    let mut swaps = 0u64;
    let mut buffer = vec![0.0; n];
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid || j < end {
                if i < mid && (j >= end || values[i] <= values[j]) {
                    buffer[k] = values[i];
                    i += 1;
                } else {
                    buffer[k] = values[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                }
                k += 1;
            }
            start = end;
        }
        std::mem::swap(values, &mut buffer);
        width *= 2;
    }
    swaps
}

/// C − D by direct pair enumeration; used by the exact permutation p.
fn s_statistic(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let prod = (x[i] - x[j]) * (y[i] - y[j]);
            if prod > 0.0 {
                s += 1.0;
            } else if prod < 0.0 {
                s -= 1.0;
            }
        }
    }
    s
}

/// Lexicographic next permutation over a f64 slice; false once exhausted.
fn next_permutation(values: &mut [f64]) -> bool {
    let n = values.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && values[i - 1] >= values[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while values[j] <= values[i - 1] {
        j -= 1;
    }
    values.swap(i - 1, j);
    values[i..].reverse();
    true
}

/// Exhaustive two-sided permutation p over distinct arrangements of `y`.
/// Every distinct arrangement stands for the same number of raw
/// permutations, so the fraction matches the n! definition.
fn exact_permutation_p<F: Fn(&[f64]) -> f64>(y: &[f64], statistic: F, observed: f64) -> f64 {
    let mut arrangement = y.to_vec();
    arrangement.sort_by(f64::total_cmp);
    let mut total = 0u64;
    let mut at_least = 0u64;
    loop {
        total += 1;
        if statistic(&arrangement).abs() >= observed.abs() - 1e-9 {
            at_least += 1;
        }
        if !next_permutation(&mut arrangement) {
            break;
        }
    }
    at_least as f64 / total as f64
}

/// Kendall's tau-b with tie corrections. For n ≤ 9 the p-value is the
/// exhaustive two-sided permutation p; beyond that, the normal
/// approximation of S with tie-corrected variance.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_paired(x, y, 2)?;
    let n = x.len();

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let x_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (n1, v1x, v2x) = tie_terms(&x_sorted);

    // joint (x, y) tie pairs
    let mut n3 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pairs[j + 1] == pairs[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        n3 += t * (t - 1.0) / 2.0;
        i = j + 1;
    }

    let mut y_in_x_order: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_inversions(&mut y_in_x_order);
    // y_in_x_order is now globally sorted by y
    let (n2, v1y, v2y) = tie_terms(&y_in_x_order);

    let n0 = n as f64 * (n as f64 - 1.0) / 2.0;
    if n0 - n1 == 0.0 {
        return Err(Error::Degenerate("all x values tied".into()));
    }
    if n0 - n2 == 0.0 {
        return Err(Error::Degenerate("all y values tied".into()));
    }

    let s = n0 - n1 - n2 + n3 - 2.0 * swaps as f64;
    let tau = (s / ((n0 - n1) * (n0 - n2)).sqrt()).clamp(-1.0, 1.0);

    let p_value = if n <= EXACT_PERMUTATION_MAX_N {
        exact_permutation_p(y, |perm| s_statistic(x, perm), s)
    } else {
        let nf = n as f64;
        let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
        let var_s = (v0 - v1x - v1y) / 18.0
            + (2.0 * n1 * n2) / (nf * (nf - 1.0))
            + (v2x * v2y) / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
        if var_s <= 0.0 {
            1.0
        } else {
            erfc((s / var_s.sqrt()).abs() / std::f64::consts::SQRT_2)
        }
    };

    Ok(CorrelationResult {
        coefficient: tau,
        p_value,
        n,
        method: CorrelationMethod::KendallTauB,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate("zero rank variance".into()));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of tied-average ranks. For n ≤ 9 the
/// p-value is the exhaustive permutation p; beyond that, the two-sided
/// Student-t approximation t = rho·√((n−2)/(1−rho²)) with n−2 degrees of
/// freedom (the t-CDF evaluates the regularized incomplete beta function).
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_paired(x, y, 3)?;
    let n = x.len();
    let rx = rank_with_ties(x);
    let ry = rank_with_ties(y);
    let rho = pearson(&rx, &ry)?;

    let p_value = if n <= EXACT_PERMUTATION_MAX_N {
        // The rank covariance numerator is the only permutation-dependent
        // part of rho, but re-deriving rho per arrangement keeps this
        // route self-contained.
        exact_permutation_p(&ry, |perm| pearson(&rx, perm).unwrap_or(0.0), rho)
    } else if rho.abs() >= 1.0 - 1e-12 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };

    Ok(CorrelationResult {
        coefficient: rho,
        p_value,
        n,
        method: CorrelationMethod::Spearman,
    })
}
