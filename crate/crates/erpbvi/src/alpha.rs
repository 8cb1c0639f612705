//! Alpha-vector containers and max-plane evaluation shared by both solvers.
//!
//! An alpha vector is a linear function over the belief simplex; the maximum
//! over a set of them is a piecewise-linear convex lower bound on the value
//! function. A [`QBank`] holds one such set per action together with the
//! regularization temperature, so that
//!
//! ```text
//! Q_a(b) = max_{alpha in Gamma_a} alpha . b
//! U(b)   = lambda * ln sum_a exp(Q_a(b) / lambda)
//! ```

use serde::{Deserialize, Serialize};

use crate::math::{self, MIN_SOFT_LAMBDA};
use crate::model::Belief;

/// A hyperplane over belief space, tagged with the action whose backup
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub coeffs: Vec<f64>,
    pub action_tag: usize,
}

impl AlphaVector {
    pub fn new(coeffs: Vec<f64>, action_tag: usize) -> AlphaVector {
        debug_assert!(coeffs.iter().all(|c| c.is_finite()));
        AlphaVector { coeffs, action_tag }
    }

    /// Constant vector `value` at every state.
    pub fn constant(n_states: usize, value: f64, action_tag: usize) -> AlphaVector {
        AlphaVector::new(vec![value; n_states], action_tag)
    }

    pub fn dot(&self, b: &Belief) -> f64 {
        debug_assert_eq!(self.coeffs.len(), b.len());
        self.coeffs
            .iter()
            .zip(b.probs())
            .map(|(c, p)| c * p)
            .sum()
    }
}

/// A nonempty collection of alpha vectors; the value it represents at a
/// belief is the maximum dot product over its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSet {
    vectors: Vec<AlphaVector>,
}

impl AlphaSet {
    pub fn new(vectors: Vec<AlphaVector>) -> AlphaSet {
        assert!(!vectors.is_empty(), "alpha set must be nonempty");
        AlphaSet { vectors }
    }

    pub fn singleton(vector: AlphaVector) -> AlphaSet {
        AlphaSet {
            vectors: vec![vector],
        }
    }

    pub fn vectors(&self) -> &[AlphaVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, vector: AlphaVector) {
        debug_assert_eq!(vector.coeffs.len(), self.vectors[0].coeffs.len());
        self.vectors.push(vector);
    }

    /// Maximum dot product over the set and the index of the maximizer;
    /// ties broken by lowest index.
    pub fn max_value(&self, b: &Belief) -> (f64, usize) {
        let mut best = self.vectors[0].dot(b);
        let mut best_idx = 0;
        for (i, alpha) in self.vectors.iter().enumerate().skip(1) {
            let v = alpha.dot(b);
            if v > best {
                best = v;
                best_idx = i;
            }
        }
        (best, best_idx)
    }

    /// The maximizing vector itself.
    pub fn best_vector(&self, b: &Belief) -> &AlphaVector {
        let (_, idx) = self.max_value(b);
        &self.vectors[idx]
    }
}

/// The per-action Q-function bank: one [`AlphaSet`] per action plus the
/// entropy-regularization temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QBank {
    per_action: Vec<AlphaSet>,
    lambda: f64,
}

impl QBank {
    pub fn new(per_action: Vec<AlphaSet>, lambda: f64) -> QBank {
        assert!(!per_action.is_empty(), "bank needs at least one action");
        assert!(lambda >= 0.0, "temperature must be nonnegative");
        QBank { per_action, lambda }
    }

    pub fn n_actions(&self) -> usize {
        self.per_action.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set(&self, a: usize) -> &AlphaSet {
        &self.per_action[a]
    }

    pub fn sets(&self) -> &[AlphaSet] {
        &self.per_action
    }

    pub fn sets_mut(&mut self) -> &mut [AlphaSet] {
        &mut self.per_action
    }

    /// `Q_a(b)`: max-plane evaluation of the action's alpha set.
    pub fn q_value(&self, a: usize, b: &Belief) -> f64 {
        self.per_action[a].max_value(b).0
    }

    pub fn q_values(&self, b: &Belief) -> Vec<f64> {
        self.per_action.iter().map(|set| set.max_value(b).0).collect()
    }

    /// The entropy-regularized value `lambda * ln sum_a exp(Q_a(b) / lambda)`,
    /// computed with max-shift stabilization; the hard max for temperatures
    /// below [`MIN_SOFT_LAMBDA`].
    pub fn value(&self, b: &Belief) -> f64 {
        math::log_sum_exp_scaled(&self.q_values(b), self.lambda)
    }

    /// Per-action dominating vectors at `b`: the member of each `Gamma_i`
    /// maximal at `b` (ties by lowest index). These form the columns of the
    /// matrix used by the soft backup.
    pub fn dominating_columns(&self, b: &Belief) -> Vec<&AlphaVector> {
        self.per_action.iter().map(|set| set.best_vector(b)).collect()
    }

    /// True when every set's vectors have the given state dimension.
    pub fn dimension_is(&self, n_states: usize) -> bool {
        self.per_action
            .iter()
            .all(|set| set.vectors().iter().all(|v| v.coeffs.len() == n_states))
    }
}

// Re-exported here so callers of the bank see the same threshold the
// evaluation uses.
pub use crate::math::MIN_SOFT_LAMBDA as HARD_MAX_LAMBDA;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_belief(rng: &mut ChaCha8Rng, n: usize) -> Belief {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|p| *p /= sum);
        Belief::new(v).unwrap()
    }

    #[test]
    fn single_vector_max() {
        let set = AlphaSet::singleton(AlphaVector::new(vec![2.0, -1.0], 0));
        let b = Belief::new(vec![0.25, 0.75]).unwrap();
        let (v, i) = set.max_value(&b);
        assert!((v - (0.5 - 0.75)).abs() < 1e-12);
        assert_eq!(i, 0);
    }

    #[test]
    fn symmetric_tie_breaks_to_lowest_index() {
        let set = AlphaSet::new(vec![
            AlphaVector::new(vec![1.0, 0.0], 0),
            AlphaVector::new(vec![0.0, 1.0], 1),
        ]);
        let b = Belief::uniform(2);
        let (v, i) = set.max_value(&b);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(i, 0);
    }

    #[test]
    fn max_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..=4);
            let vectors: Vec<AlphaVector> = (0..5)
                .map(|i| {
                    AlphaVector::new(
                        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
                        i % 2,
                    )
                })
                .collect();
            let set = AlphaSet::new(vectors.clone());
            let b = random_belief(&mut rng, n);
            let (got, got_idx) = set.max_value(&b);
            let mut want = f64::NEG_INFINITY;
            let mut want_idx = 0;
            for (i, alpha) in vectors.iter().enumerate() {
                let v = alpha.dot(&b);
                if v > want {
                    want = v;
                    want_idx = i;
                }
            }
            assert_eq!(got_idx, want_idx);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn max_value_invariant_under_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let vectors: Vec<AlphaVector> = (0..6)
            .map(|_| AlphaVector::new((0..3).map(|_| rng.random_range(-2.0..2.0)).collect(), 0))
            .collect();
        let mut reversed = vectors.clone();
        reversed.reverse();
        let a = AlphaSet::new(vectors);
        let b_set = AlphaSet::new(reversed);
        for _ in 0..100 {
            let b = random_belief(&mut rng, 3);
            assert!((a.max_value(&b).0 - b_set.max_value(&b).0).abs() < 1e-12);
        }
    }

    #[test]
    fn bank_value_equal_qs() {
        // All actions share the same constant Q; value is q + lambda ln n.
        let n_actions = 3;
        let sets: Vec<AlphaSet> = (0..n_actions)
            .map(|a| AlphaSet::singleton(AlphaVector::constant(2, 1.5, a)))
            .collect();
        let bank = QBank::new(sets, 1.0);
        let b = Belief::uniform(2);
        assert!((bank.value(&b) - (1.5 + 3.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bank_value_hard_max_limit() {
        let sets = vec![
            AlphaSet::singleton(AlphaVector::constant(2, 1.0, 0)),
            AlphaSet::singleton(AlphaVector::constant(2, 0.0, 1)),
        ];
        let bank = QBank::new(sets, 0.0);
        assert_eq!(bank.value(&Belief::uniform(2)), 1.0);
    }

    #[test]
    fn bank_value_sandwich_and_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n_actions = rng.random_range(2..=4);
            let n = rng.random_range(2..=4);
            let sets: Vec<AlphaSet> = (0..n_actions)
                .map(|a| {
                    AlphaSet::new(
                        (0..rng.random_range(1..=3))
                            .map(|_| {
                                AlphaVector::new(
                                    (0..n).map(|_| rng.random_range(-4.0..4.0)).collect(),
                                    a,
                                )
                            })
                            .collect(),
                    )
                })
                .collect();
            let b = random_belief(&mut rng, n);
            let lambdas = [0.0, 0.01, 0.3, 1.0, 4.0];
            let mut prev = f64::NEG_INFINITY;
            for &lambda in &lambdas {
                let bank = QBank::new(sets.clone(), lambda);
                let v = bank.value(&b);
                let max_q = bank
                    .q_values(&b)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(v >= max_q - 1e-9);
                assert!(v <= max_q + lambda * (n_actions as f64).ln() + 1e-9);
                assert!(v >= prev - 1e-9, "bank value must be nondecreasing in lambda");
                prev = v;
            }
        }
    }
}
