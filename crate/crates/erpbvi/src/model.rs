//! Tabular POMDP model, belief representation, and exact Bayesian belief update.
//!
//! The model is the usual finite tuple (S, A, O, T, O, R, gamma) stored as
//! dense probability tables:
//!
//! - `T[s][a][s']` transition probabilities,
//! - `Z[a][s'][o]` observation probabilities conditioned on (action, next state),
//! - `R[s][a]` rewards.
//!
//! Beliefs are dense probability vectors over states. The posterior after
//! taking action `a` and observing `o` is
//!
//! ```text
//! b'(s') ∝ Z[a][s'][o] · Σ_s T[s][a][s'] b(s)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::math;

/// Probability tables must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// An unnormalized posterior mass at or below this threshold means the
/// observation is impossible under the current belief and action.
pub const ZERO_LIKELIHOOD_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum ModelError {
    /// The observation has (numerically) zero probability under the belief
    /// and action, so no posterior exists. Callers decide how to recover.
    #[error("observation {observation} has zero likelihood after action {action}")]
    ZeroLikelihood { action: usize, observation: usize },
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Optional human-readable names for states, actions, and observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub states: Option<Vec<String>>,
    pub actions: Option<Vec<String>>,
    pub observations: Option<Vec<String>>,
}

/// An explicit-matrix POMDP over finite state, action, and observation spaces.
///
/// Immutable after construction and safe to share across threads. Terminal
/// states are absorbing (self-loop with probability 1) and yield zero reward
/// for every action, so discounted infinite-horizon sums are well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPomdp {
    n_states: usize,
    n_actions: usize,
    n_observations: usize,
    /// Flattened `T[s][a][s']`, indexed `(s * n_actions + a) * n_states + s'`.
    transition: Vec<f64>,
    /// Flattened `Z[a][s'][o]`, indexed `(a * n_states + s') * n_observations + o`.
    observation: Vec<f64>,
    /// Flattened `R[s][a]`, indexed `s * n_actions + a`.
    reward: Vec<f64>,
    discount: f64,
    terminal: Vec<bool>,
    labels: Labels,
    /// Nonzero successors of each (s, a), for sparse belief prediction.
    succ: Vec<Vec<(usize, f64)>>,
    /// Nonzero observations of each (a, s'), for sparse posterior splitting.
    obs_nz: Vec<Vec<(usize, f64)>>,
}

impl TabularPomdp {
    pub fn builder(n_states: usize, n_actions: usize, n_observations: usize) -> PomdpBuilder {
        PomdpBuilder::new(n_states, n_actions, n_observations)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_observations(&self) -> usize {
        self.n_observations
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(|&s| self.terminal[s])
    }

    /// `T[s][a][s']`
    pub fn transition_prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + s_next]
    }

    /// `Z[a][s'][o]`
    pub fn observation_prob(&self, a: usize, s_next: usize, o: usize) -> f64 {
        self.observation[(a * self.n_states + s_next) * self.n_observations + o]
    }

    /// `R[s][a]`
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    /// Nonzero transition successors of (s, a).
    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.succ[s * self.n_actions + a]
    }

    /// Nonzero observation entries of (a, s').
    pub fn observations_of(&self, a: usize, s_next: usize) -> &[(usize, f64)] {
        &self.obs_nz[a * self.n_states + s_next]
    }

    pub fn min_reward(&self) -> f64 {
        self.reward.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_reward(&self) -> f64 {
        self.reward
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when the two models share state/action/observation space sizes.
    pub fn same_shape(&self, other: &TabularPomdp) -> bool {
        self.n_states == other.n_states
            && self.n_actions == other.n_actions
            && self.n_observations == other.n_observations
    }

    /// Predicted state distribution `Σ_s T[s][a][s'] b(s)` before conditioning
    /// on an observation.
    pub fn predict(&self, b: &Belief, a: usize) -> Vec<f64> {
        let mut pred = vec![0.0; self.n_states];
        for (s, &p) in b.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(s_next, t) in self.successors(s, a) {
                pred[s_next] += t * p;
            }
        }
        pred
    }

    /// Exact Bayes posterior `b'(s') ∝ Z[a][s'][o] · Σ_s T[s][a][s'] b(s)`.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Result<Belief, ModelError> {
        debug_assert!(a < self.n_actions && o < self.n_observations);
        let pred = self.predict(b, a);
        let mut post = vec![0.0; self.n_states];
        let mut total = 0.0;
        for (s_next, &p) in pred.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let w = self.observation_prob(a, s_next, o) * p;
            post[s_next] = w;
            total += w;
        }
        if total <= ZERO_LIKELIHOOD_THRESHOLD {
            return Err(ModelError::ZeroLikelihood {
                action: a,
                observation: o,
            });
        }
        for w in &mut post {
            *w /= total;
        }
        Ok(Belief(post))
    }

    /// Expected immediate reward `Σ_s b(s) R[s][a]`.
    pub fn belief_reward(&self, b: &Belief, a: usize) -> f64 {
        b.probs()
            .iter()
            .enumerate()
            .map(|(s, &p)| p * self.reward(s, a))
            .sum()
    }

    /// All posteriors reachable from `b` under action `a`, with their
    /// observation marginals. Observations with zero marginal are omitted.
    pub fn successor_beliefs(&self, b: &Belief, a: usize) -> Vec<(usize, f64, Belief)> {
        let pred = self.predict(b, a);
        // Split the predicted mass across observations in one pass.
        let mut slot_of_obs = vec![usize::MAX; self.n_observations];
        let mut slots: Vec<(usize, f64, Vec<f64>)> = Vec::new();
        for (s_next, &p) in pred.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(o, z) in self.observations_of(a, s_next) {
                let w = z * p;
                let slot = if slot_of_obs[o] == usize::MAX {
                    slot_of_obs[o] = slots.len();
                    slots.push((o, 0.0, vec![0.0; self.n_states]));
                    slots.len() - 1
                } else {
                    slot_of_obs[o]
                };
                slots[slot].1 += w;
                slots[slot].2[s_next] += w;
            }
        }
        slots.sort_by_key(|&(o, _, _)| o);
        slots
            .into_iter()
            .filter(|&(_, marginal, _)| marginal > ZERO_LIKELIHOOD_THRESHOLD)
            .map(|(o, marginal, mut post)| {
                for w in &mut post {
                    *w /= marginal;
                }
                (o, marginal, Belief(post))
            })
            .collect()
    }

    /// Samples the generative chain `s' ~ T(.|s,a)`, `o ~ Z(.|a,s')`,
    /// returning `(s', o, R[s][a])`.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> (usize, usize, f64) {
        let succ = self.successors(s, a);
        let s_next = succ[sample_from_pairs(succ, rng)].0;
        let obs = self.observations_of(a, s_next);
        let o = obs[sample_from_pairs(obs, rng)].0;
        (s_next, o, self.reward(s, a))
    }

    /// Samples the belief-state transition: draws `s ~ b`, steps the model,
    /// and conditions the belief on the sampled observation.
    pub fn sample_belief_successor<R: Rng + ?Sized>(
        &self,
        b: &Belief,
        a: usize,
        rng: &mut R,
    ) -> Result<(usize, Belief), ModelError> {
        let s = math::sample_categorical(b.probs(), rng);
        let (_, o, _) = self.sample_transition(s, a, rng);
        let next = self.belief_update(b, a, o)?;
        Ok((o, next))
    }

    /// Stable content hash of the model tables; used to bind policy files to
    /// the model they were trained on.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for n in [self.n_states, self.n_actions, self.n_observations] {
            hasher.update((n as u64).to_le_bytes());
        }
        hasher.update(self.discount.to_le_bytes());
        for table in [&self.transition, &self.observation, &self.reward] {
            for v in table.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        for &t in &self.terminal {
            hasher.update([t as u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn sample_from_pairs<R: Rng + ?Sized>(pairs: &[(usize, f64)], rng: &mut R) -> usize {
    debug_assert!(!pairs.is_empty());
    if pairs.len() == 1 {
        return 0;
    }
    let total: f64 = pairs.iter().map(|&(_, p)| p).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &(_, p)) in pairs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    pairs.len() - 1
}

/// Incremental constructor for [`TabularPomdp`]; validates all model
/// invariants in [`PomdpBuilder::build`].
#[derive(Debug, Clone)]
pub struct PomdpBuilder {
    n_states: usize,
    n_actions: usize,
    n_observations: usize,
    transition: Vec<f64>,
    observation: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
    terminal: Vec<bool>,
    labels: Labels,
}

impl PomdpBuilder {
    pub fn new(n_states: usize, n_actions: usize, n_observations: usize) -> Self {
        PomdpBuilder {
            n_states,
            n_actions,
            n_observations,
            transition: vec![0.0; n_states * n_actions * n_states],
            observation: vec![0.0; n_actions * n_states * n_observations],
            reward: vec![0.0; n_states * n_actions],
            discount: 0.95,
            terminal: vec![false; n_states],
            labels: Labels::default(),
        }
    }

    pub fn discount(mut self, gamma: f64) -> Self {
        self.discount = gamma;
        self
    }

    pub fn transition(mut self, s: usize, a: usize, s_next: usize, p: f64) -> Self {
        self.set_transition(s, a, s_next, p);
        self
    }

    pub fn set_transition(&mut self, s: usize, a: usize, s_next: usize, p: f64) {
        self.transition[(s * self.n_actions + a) * self.n_states + s_next] = p;
    }

    pub fn add_transition(&mut self, s: usize, a: usize, s_next: usize, p: f64) {
        self.transition[(s * self.n_actions + a) * self.n_states + s_next] += p;
    }

    pub fn observation(mut self, a: usize, s_next: usize, o: usize, p: f64) -> Self {
        self.set_observation(a, s_next, o, p);
        self
    }

    pub fn set_observation(&mut self, a: usize, s_next: usize, o: usize, p: f64) {
        self.observation[(a * self.n_states + s_next) * self.n_observations + o] = p;
    }

    pub fn reward(mut self, s: usize, a: usize, r: f64) -> Self {
        self.set_reward(s, a, r);
        self
    }

    pub fn set_reward(&mut self, s: usize, a: usize, r: f64) {
        self.reward[s * self.n_actions + a] = r;
    }

    pub fn terminal(mut self, s: usize) -> Self {
        self.set_terminal(s);
        self
    }

    pub fn set_terminal(&mut self, s: usize) {
        self.terminal[s] = true;
    }

    pub fn labels(mut self, labels: Labels) -> Self {
        self.labels = labels;
        self
    }

    /// Marks `s` terminal and installs the absorbing self-loop and zero reward
    /// for every action.
    pub fn make_absorbing(&mut self, s: usize) {
        self.set_terminal(s);
        for a in 0..self.n_actions {
            for s_next in 0..self.n_states {
                self.set_transition(s, a, s_next, if s_next == s { 1.0 } else { 0.0 });
            }
            self.set_reward(s, a, 0.0);
        }
    }

    pub fn build(self) -> Result<TabularPomdp, ModelError> {
        if self.n_states == 0 || self.n_actions == 0 || self.n_observations == 0 {
            return Err(ModelError::Validation(
                "state, action, and observation spaces must be nonempty".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(ModelError::Validation(format!(
                "discount must lie in [0, 1), got {}",
                self.discount
            )));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let base = (s * self.n_actions + a) * self.n_states;
                let row = &self.transition[base..base + self.n_states];
                if row.iter().any(|&p| !(0.0..=1.0 + PROB_SUM_TOL).contains(&p)) {
                    return Err(ModelError::Validation(format!(
                        "transition probabilities for (s={s}, a={a}) outside [0, 1]"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(ModelError::Validation(format!(
                        "transition row (s={s}, a={a}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        for a in 0..self.n_actions {
            for s_next in 0..self.n_states {
                let base = (a * self.n_states + s_next) * self.n_observations;
                let row = &self.observation[base..base + self.n_observations];
                if row.iter().any(|&p| !(0.0..=1.0 + PROB_SUM_TOL).contains(&p)) {
                    return Err(ModelError::Validation(format!(
                        "observation probabilities for (a={a}, s'={s_next}) outside [0, 1]"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(ModelError::Validation(format!(
                        "observation row (a={a}, s'={s_next}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        for (s, &t) in self.terminal.iter().enumerate() {
            if !t {
                continue;
            }
            for a in 0..self.n_actions {
                let self_loop = self.transition[(s * self.n_actions + a) * self.n_states + s];
                if (self_loop - 1.0).abs() > PROB_SUM_TOL {
                    return Err(ModelError::Validation(format!(
                        "terminal state {s} must self-loop under action {a}"
                    )));
                }
                if self.reward[s * self.n_actions + a] != 0.0 {
                    return Err(ModelError::Validation(format!(
                        "terminal state {s} must have zero reward under action {a}"
                    )));
                }
            }
        }
        for (name, field, expected) in [
            ("state", &self.labels.states, self.n_states),
            ("action", &self.labels.actions, self.n_actions),
            ("observation", &self.labels.observations, self.n_observations),
        ] {
            if let Some(v) = field {
                if v.len() != expected {
                    return Err(ModelError::Validation(format!(
                        "{name} labels have length {}, expected {expected}",
                        v.len()
                    )));
                }
            }
        }

        let mut succ = vec![Vec::new(); self.n_states * self.n_actions];
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let base = (s * self.n_actions + a) * self.n_states;
                succ[s * self.n_actions + a] = (0..self.n_states)
                    .filter(|&s2| self.transition[base + s2] > 0.0)
                    .map(|s2| (s2, self.transition[base + s2]))
                    .collect();
            }
        }
        let mut obs_nz = vec![Vec::new(); self.n_actions * self.n_states];
        for a in 0..self.n_actions {
            for s_next in 0..self.n_states {
                let base = (a * self.n_states + s_next) * self.n_observations;
                obs_nz[a * self.n_states + s_next] = (0..self.n_observations)
                    .filter(|&o| self.observation[base + o] > 0.0)
                    .map(|o| (o, self.observation[base + o]))
                    .collect();
            }
        }

        Ok(TabularPomdp {
            n_states: self.n_states,
            n_actions: self.n_actions,
            n_observations: self.n_observations,
            transition: self.transition,
            observation: self.observation,
            reward: self.reward,
            discount: self.discount,
            terminal: self.terminal,
            labels: self.labels,
            succ,
            obs_nz,
        })
    }
}

/// A probability distribution over states; the "state" of the belief MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates nonnegativity and unit sum (within [`PROB_SUM_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Belief, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::Validation("belief over zero states".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(ModelError::Validation(
                "belief entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ModelError::Validation(format!(
                "belief sums to {sum}, expected 1"
            )));
        }
        Ok(Belief(probs))
    }

    pub fn uniform(n_states: usize) -> Belief {
        Belief(vec![1.0 / n_states as f64; n_states])
    }

    /// Certainty at a single state.
    pub fn point_mass(n_states: usize, s: usize) -> Belief {
        let mut probs = vec![0.0; n_states];
        probs[s] = 1.0;
        Belief(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        math::l1_distance(&self.0, &other.0)
    }
}
