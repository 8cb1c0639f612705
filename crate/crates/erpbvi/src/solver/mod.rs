//! Point-based solvers: shared belief-set machinery plus the classic and
//! entropy-regularized variants.
//!
//! Both solvers alternate improvement sweeps (a backup at every belief point)
//! with pruning and belief-set expansion for a fixed number of iterations.
//! They are fully deterministic: expansion enumerates all one-step posteriors
//! and selects new points by distance, so identical configurations produce
//! bit-identical value functions.

pub mod pbvi;
pub mod soft;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaVector;
use crate::math;
use crate::model::{Belief, ModelError, TabularPomdp};

/// Belief points closer than this (L1) are treated as duplicates.
pub const BELIEF_DEDUP_EPS: f64 = 1e-9;

/// Budget knobs shared by both solvers.
///
/// `rng_seed` is carried into output metadata for provenance; the solvers
/// themselves consume no randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub n_iterations: usize,
    pub backups_per_improve: usize,
    pub max_beliefs: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            n_iterations: 20,
            backups_per_improve: 3,
            max_beliefs: 200,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_iterations == 0 || self.backups_per_improve == 0 || self.max_beliefs == 0 {
            return Err(ModelError::Validation(
                "solver budgets must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The set `B` of belief points anchoring the backups. Nonempty, with no two
/// points within [`BELIEF_DEDUP_EPS`] of each other; insertion order is
/// stable so solver runs are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSet {
    points: Vec<Belief>,
}

impl BeliefSet {
    pub fn new(initial: Belief) -> BeliefSet {
        BeliefSet {
            points: vec![initial],
        }
    }

    pub fn points(&self) -> &[Belief] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Minimum L1 distance from `b` to the set.
    pub fn min_distance(&self, b: &Belief) -> f64 {
        self.points
            .iter()
            .map(|p| p.l1_distance(b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inserts `b` unless a point within [`BELIEF_DEDUP_EPS`] already exists.
    pub fn try_insert(&mut self, b: Belief) -> bool {
        if self.min_distance(&b) <= BELIEF_DEDUP_EPS {
            return false;
        }
        self.points.push(b);
        true
    }
}

/// Grows `beliefs` by at most one point per existing point: for each source,
/// enumerates the posteriors of every (action, observation) pair with
/// positive marginal and adds the candidate farthest (min-L1) from the
/// current set. Stops adding once `max_beliefs` is reached.
pub fn expand(model: &TabularPomdp, beliefs: &mut BeliefSet, max_beliefs: usize) {
    let sources: Vec<Belief> = beliefs.points().to_vec();
    for b in &sources {
        if beliefs.len() >= max_beliefs {
            return;
        }
        let mut best: Option<(f64, Belief)> = None;
        for a in 0..model.n_actions() {
            for (_, _, next) in model.successor_beliefs(b, a) {
                let dist = beliefs.min_distance(&next);
                if dist <= BELIEF_DEDUP_EPS {
                    continue;
                }
                // Strict comparison keeps the first candidate in (a, o) order
                // on ties.
                if best.as_ref().map_or(true, |(d, _)| dist > *d) {
                    best = Some((dist, next));
                }
            }
        }
        if let Some((_, next)) = best {
            beliefs.try_insert(next);
        }
    }
}

/// The conservative initialization `alpha(s) = min_{s,a} R[s][a] / (1 - gamma)`:
/// a valid lower bound on any policy's value.
pub fn lower_bound_vector(model: &TabularPomdp) -> AlphaVector {
    let worst = model.min_reward() / (1.0 - model.discount());
    AlphaVector::constant(model.n_states(), worst, 0)
}

/// Per-sweep diagnostics captured during a solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    /// Value at each belief point after every improvement sweep, in sweep
    /// order. Belief indices are stable: entries `0..k` of a later sweep
    /// refer to the same points as an earlier sweep of length `k`.
    pub sweep_values: Vec<Vec<f64>>,
    /// The final expanded belief set.
    pub beliefs: BeliefSet,
}

/// One-step lookahead fold shared by both backups:
///
/// ```text
/// alpha_a(s) = R(s, a) + gamma * sum_{s', o} Z[a][s'][o] T[s][a][s'] alpha_ao(s')
/// ```
///
/// `per_obs` holds the `(o, alpha_ao)` pairs for observations with positive
/// marginal; missing observations contribute nothing (their marginal is 0).
pub(crate) fn lookahead_vector(
    model: &TabularPomdp,
    a: usize,
    per_obs: &[(usize, Vec<f64>)],
) -> Vec<f64> {
    let n = model.n_states();
    // g(s') = sum_o Z[a][s'][o] * alpha_ao(s')
    let mut g = vec![0.0; n];
    for (o, alpha_ao) in per_obs {
        for s_next in 0..n {
            let z = model.observation_prob(a, s_next, *o);
            if z > 0.0 {
                g[s_next] += z * alpha_ao[s_next];
            }
        }
    }
    let gamma = model.discount();
    (0..n)
        .map(|s| {
            let mut acc = 0.0;
            for &(s_next, t) in model.successors(s, a) {
                acc += t * g[s_next];
            }
            model.reward(s, a) + gamma * acc
        })
        .collect()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    math::l1_distance(a, b)
}
