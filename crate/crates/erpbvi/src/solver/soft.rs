//! Entropy-regularized point-based value iteration.
//!
//! Instead of a single value function, the solver maintains one alpha-vector
//! set per action (a Q-function bank). The backup at a belief point produces
//! one new vector for *every* action: at each posterior it gathers the
//! dominating vector of every Q-function into a matrix `A` and takes the
//! gradient of the smoothed utility
//!
//! ```text
//! U(b') = lambda * LSE(A^T b' / lambda)        (value)
//! alpha_ao = A * SoftMax(A^T b' / lambda)      (tangent at b')
//! ```
//!
//! followed by the usual one-step lookahead. At zero temperature the softmax
//! hardens and the backup reduces exactly to the unregularized one.

use crate::alpha::{AlphaSet, AlphaVector, QBank};
use crate::math::{self, MIN_SOFT_LAMBDA};
use crate::model::{Belief, ModelError, TabularPomdp};
use crate::policy::SoftPolicy;
use crate::prune;
use crate::solver::{expand, lookahead_vector, lower_bound_vector, BeliefSet, SolveStats, SolverConfig};

/// The smoothed utility `lambda * LSE(A^T x / lambda)` of a fixed column
/// matrix at an arbitrary point `x`. Hard max below [`MIN_SOFT_LAMBDA`].
pub fn lse_utility(columns: &[&AlphaVector], x: &[f64], lambda: f64) -> f64 {
    let scores: Vec<f64> = columns.iter().map(|c| dot(&c.coeffs, x)).collect();
    math::log_sum_exp_scaled(&scores, lambda)
}

/// The gradient of [`lse_utility`] with respect to `x`: the softmax-weighted
/// combination of the columns. This is the tangent hyperplane of the smoothed
/// utility at the point used to form the weights.
pub fn tangent_vector(columns: &[&AlphaVector], x: &[f64], lambda: f64) -> Vec<f64> {
    debug_assert!(!columns.is_empty());
    let scores: Vec<f64> = columns.iter().map(|c| dot(&c.coeffs, x)).collect();
    if lambda < MIN_SOFT_LAMBDA {
        return columns[math::argmax(&scores)].coeffs.clone();
    }
    let weights = math::softmax_scaled(&scores, lambda);
    let n = columns[0].coeffs.len();
    let mut out = vec![0.0; n];
    for (col, w) in columns.iter().zip(weights) {
        for (o, c) in out.iter_mut().zip(&col.coeffs) {
            *o += w * c;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The smoothed selection step of the backup for a single (action,
/// observation) pair: updates the belief, gathers each Q-function's
/// dominating vector at the posterior, and returns the softmax combination.
///
/// Fails with `ZeroLikelihood` when the observation is impossible under
/// `(b, a)`.
pub fn soft_alpha_ao(
    model: &TabularPomdp,
    bank: &QBank,
    b: &Belief,
    a: usize,
    o: usize,
) -> Result<AlphaVector, ModelError> {
    let next = model.belief_update(b, a, o)?;
    let columns = bank.dominating_columns(&next);
    let coeffs = tangent_vector(&columns, next.probs(), bank.lambda());
    Ok(AlphaVector::new(coeffs, a))
}

/// The entropy-regularized backup at `b`: returns one new alpha vector per
/// action, each assembled from the smoothed per-observation selections and a
/// one-step lookahead. Observations with zero marginal contribute nothing.
pub fn backup(model: &TabularPomdp, b: &Belief, bank: &QBank) -> Vec<AlphaVector> {
    let lambda = bank.lambda();
    (0..model.n_actions())
        .map(|a| {
            let per_obs: Vec<(usize, Vec<f64>)> = model
                .successor_beliefs(b, a)
                .into_iter()
                .map(|(o, _, next)| {
                    let columns = bank.dominating_columns(&next);
                    (o, tangent_vector(&columns, next.probs(), lambda))
                })
                .collect();
            AlphaVector::new(lookahead_vector(model, a, &per_obs), a)
        })
        .collect()
}

/// Runs the solver at temperature `lambda` and returns the softmax policy
/// over the solved Q-function bank.
pub fn solve(model: &TabularPomdp, b0: &Belief, lambda: f64, config: &SolverConfig) -> SoftPolicy {
    solve_with_stats(model, b0, lambda, config).0
}

/// As [`solve`], also returning per-sweep bank values and the final belief
/// set.
pub fn solve_with_stats(
    model: &TabularPomdp,
    b0: &Belief,
    lambda: f64,
    config: &SolverConfig,
) -> (SoftPolicy, SolveStats) {
    assert!(lambda >= 0.0, "temperature must be nonnegative");
    let mut beliefs = BeliefSet::new(b0.clone());
    let lb = lower_bound_vector(model);
    let sets: Vec<AlphaSet> = (0..model.n_actions())
        .map(|a| {
            AlphaSet::singleton(AlphaVector {
                coeffs: lb.coeffs.clone(),
                action_tag: a,
            })
        })
        .collect();
    let mut bank = QBank::new(sets, lambda);
    let mut stats = SolveStats {
        sweep_values: Vec::new(),
        beliefs: beliefs.clone(),
    };
    for _ in 0..config.n_iterations {
        for _ in 0..config.backups_per_improve {
            // Sequential in-place sweep: each backup sees vectors appended by
            // earlier beliefs in the same pass.
            for b in beliefs.points() {
                let new_vectors = backup(model, b, &bank);
                for (a, v) in new_vectors.into_iter().enumerate() {
                    bank.sets_mut()[a].push(v);
                }
            }
            stats.sweep_values.push(
                beliefs
                    .points()
                    .iter()
                    .map(|b| bank.value(b))
                    .collect(),
            );
        }
        for set in bank.sets_mut() {
            match prune::prune(set) {
                Ok(pruned) => *set = pruned,
                Err(e) => log::warn!("skipping prune round: {e}"),
            }
        }
        expand(model, &mut beliefs, config.max_beliefs);
    }
    stats.beliefs = beliefs;
    (SoftPolicy::new(bank), stats)
}
