//! Removal of dominated alpha vectors.
//!
//! A vector is dominated when it is nowhere maximal over the belief simplex.
//! Removing it leaves the max-plane value unchanged at every belief, so the
//! lower bound represented by the set never degrades.
//!
//! The check is a small linear program per vector: maximize the margin delta
//! subject to `b . alpha >= b . alpha' + delta` for every retained competitor
//! `alpha'` and `b` in the probability simplex. A vector is kept iff the
//! optimal margin exceeds `-DOMINANCE_EPS` (retain on ties). A cheap pairwise
//! componentwise-dominance prefilter removes obvious losers first.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use thiserror::Error;

use crate::alpha::AlphaSet;

/// Margin tolerance for the dominance LP; ties retain the vector so pruning
/// can never lower the represented value.
pub const DOMINANCE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PruneError {
    /// The LP subproblem could not be solved; signals a numerical pathology.
    /// Callers may skip pruning for the round.
    #[error("alpha pruning linear program failed: {0}")]
    LpFailure(String),
}

/// Returns the subset of `set` whose max-plane value equals the input's at
/// every belief in the simplex. Keeps at least one vector.
pub fn prune(set: &AlphaSet) -> Result<AlphaSet, PruneError> {
    let vectors = set.vectors();
    if vectors.len() == 1 {
        return Ok(set.clone());
    }

    // Componentwise prefilter: drop vectors dominated entrywise by another
    // retained vector. Exact duplicates keep the lowest index.
    let n = vectors.len();
    let mut alive: Vec<bool> = vec![true; n];
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        for j in 0..n {
            if i == j || !alive[j] {
                continue;
            }
            let vi = &vectors[i].coeffs;
            let vj = &vectors[j].coeffs;
            let j_covers_i = vi.iter().zip(vj).all(|(a, b)| b >= a);
            if j_covers_i && (vi != vj || j < i) {
                alive[i] = false;
                break;
            }
        }
    }

    // LP pass: test each survivor against the other currently retained
    // vectors; removing a vector strictly below their upper envelope cannot
    // change the maximum anywhere.
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        let competitors: Vec<usize> = (0..n).filter(|&j| j != i && alive[j]).collect();
        if competitors.is_empty() {
            continue;
        }
        let margin = best_margin(
            &vectors[i].coeffs,
            competitors.iter().map(|&j| vectors[j].coeffs.as_slice()),
        )?;
        if margin <= -DOMINANCE_EPS {
            alive[i] = false;
        }
    }

    let kept: Vec<_> = vectors
        .iter()
        .zip(&alive)
        .filter(|&(_, keep)| *keep)
        .map(|(v, _)| v.clone())
        .collect();
    debug_assert!(!kept.is_empty());
    Ok(AlphaSet::new(kept))
}

/// Solves `max delta s.t. b in simplex, b . (alpha - other) >= delta` over all
/// competitors. The optimum is the best advantage `alpha` achieves anywhere.
fn best_margin<'a>(
    alpha: &[f64],
    others: impl Iterator<Item = &'a [f64]>,
) -> Result<f64, PruneError> {
    let n = alpha.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let delta = problem.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let belief: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    problem.add_constraint(
        belief.iter().map(|&v| (v, 1.0)),
        ComparisonOp::Eq,
        1.0,
    );
    for other in others {
        let mut terms: Vec<_> = belief
            .iter()
            .enumerate()
            .map(|(s, &v)| (v, alpha[s] - other[s]))
            .collect();
        terms.push((delta, -1.0));
        problem.add_constraint(terms, ComparisonOp::Ge, 0.0);
    }
    match problem.solve() {
        Ok(SolveOutcome::Solution(solution)) => Ok(solution.objective()),
        Ok(SolveOutcome::Interrupted(_)) => {
            Err(PruneError::LpFailure("solver interrupted".into()))
        }
        Err(e) => Err(PruneError::LpFailure(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaVector;
    use crate::model::Belief;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_belief(rng: &mut ChaCha8Rng, n: usize) -> Belief {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|p| *p /= sum);
        Belief::new(v).unwrap()
    }

    #[test]
    fn componentwise_dominated_vector_removed() {
        let set = AlphaSet::new(vec![
            AlphaVector::new(vec![1.0, 1.0], 0),
            AlphaVector::new(vec![0.0, 0.0], 1),
        ]);
        let pruned = prune(&set).unwrap();
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.vectors()[0].coeffs, vec![1.0, 1.0]);
    }

    #[test]
    fn corner_winners_both_retained() {
        let set = AlphaSet::new(vec![
            AlphaVector::new(vec![1.0, 0.0], 0),
            AlphaVector::new(vec![0.0, 1.0], 1),
        ]);
        let pruned = prune(&set).unwrap();
        assert_eq!(pruned.len(), 2);
    }

    #[test]
    fn interior_dominated_vector_removed() {
        // [0.4, 0.4] is below max([1,0], [0,1]) everywhere on the simplex.
        let set = AlphaSet::new(vec![
            AlphaVector::new(vec![1.0, 0.0], 0),
            AlphaVector::new(vec![0.0, 1.0], 1),
            AlphaVector::new(vec![0.4, 0.4], 2),
        ]);
        let pruned = prune(&set).unwrap();
        assert_eq!(pruned.len(), 2);
    }

    #[test]
    fn duplicates_keep_lowest_index() {
        let set = AlphaSet::new(vec![
            AlphaVector::new(vec![0.5, 0.5], 0),
            AlphaVector::new(vec![0.5, 0.5], 1),
        ]);
        let pruned = prune(&set).unwrap();
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.vectors()[0].action_tag, 0);
    }

    #[test]
    fn envelope_preserved_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = 3;
            let set = AlphaSet::new(
                (0..20)
                    .map(|i| {
                        AlphaVector::new(
                            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                            i % 3,
                        )
                    })
                    .collect(),
            );
            let pruned = prune(&set).unwrap();
            assert!(pruned.len() <= set.len());
            for _ in 0..1000 {
                let b = random_belief(&mut rng, n);
                let before = set.max_value(&b).0;
                let after = pruned.max_value(&b).0;
                assert!(
                    (before - after).abs() < 1e-9,
                    "envelope changed: {before} vs {after}"
                );
            }
        }
    }

    #[test]
    fn single_vector_untouched() {
        let set = AlphaSet::singleton(AlphaVector::new(vec![-3.0, 2.0], 0));
        let pruned = prune(&set).unwrap();
        assert_eq!(pruned.len(), 1);
    }
}
