//! Shared numeric primitives: temperature-scaled log-sum-exp and softmax,
//! policy entropy, and categorical sampling.

use rand::Rng;

/// Temperatures below this threshold are treated as an exact hard max.
///
/// This keeps `exp(q / lambda)` from overflowing and makes the zero-temperature
/// reduction to the unregularized solver exact rather than approximate.
pub const MIN_SOFT_LAMBDA: f64 = 1e-10;

/// Computes `lambda * ln(sum_i exp(values[i] / lambda))` with max-shift
/// stabilization. For `lambda < MIN_SOFT_LAMBDA` this is the plain maximum.
pub fn log_sum_exp_scaled(values: &[f64], lambda: f64) -> f64 {
    assert!(!values.is_empty(), "log_sum_exp_scaled over empty slice");
    let max = max_value(values);
    if lambda < MIN_SOFT_LAMBDA {
        return max;
    }
    let sum: f64 = values.iter().map(|v| ((v - max) / lambda).exp()).sum();
    max + lambda * sum.ln()
}

/// Computes `softmax(values / lambda)` with max-shift stabilization.
/// For `lambda < MIN_SOFT_LAMBDA` returns a one-hot vector at the argmax
/// (ties broken by lowest index).
pub fn softmax_scaled(values: &[f64], lambda: f64) -> Vec<f64> {
    assert!(!values.is_empty(), "softmax_scaled over empty slice");
    if lambda < MIN_SOFT_LAMBDA {
        let mut out = vec![0.0; values.len()];
        out[argmax(values)] = 1.0;
        return out;
    }
    let max = max_value(values);
    let mut out: Vec<f64> = values.iter().map(|v| ((v - max) / lambda).exp()).collect();
    let sum: f64 = out.iter().sum();
    for w in &mut out {
        *w /= sum;
    }
    out
}

/// Entropy `-sum_i p_i ln p_i` of a probability vector, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Index of the largest entry; ties broken by lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn max_value(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Draws an index from an (unnormalized is fine) categorical distribution
/// using a single uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "categorical weights sum to zero");
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// L1 distance between two equal-length vectors.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
