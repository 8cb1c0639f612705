//! Belief-conditioned policies and their JSON policy-file format.
//!
//! Every policy exposes a full action distribution so rollout, inference, and
//! sampling share one interface. Deterministic policies return one-hot
//! distributions.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alpha::{AlphaSet, AlphaVector, QBank};
use crate::math::{self, MIN_SOFT_LAMBDA};
use crate::model::{Belief, TabularPomdp};

/// A stochastic policy over a finite action space, conditioned on a belief.
pub trait Policy: Send + Sync {
    fn n_actions(&self) -> usize;

    /// Probability of each action at `b`; sums to one.
    fn action_distribution(&self, b: &Belief) -> Vec<f64>;

    /// Categorical sample from [`Policy::action_distribution`].
    fn sample_action(&self, b: &Belief, rng: &mut dyn RngCore) -> usize {
        let dist = self.action_distribution(b);
        math::sample_categorical(&dist, rng)
    }
}

/// Greedy execution of a single alpha-vector set: the action tag of the
/// maximizing vector, ties broken by the set's lowest-index rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaPolicy {
    set: AlphaSet,
    n_actions: usize,
}

impl AlphaPolicy {
    pub fn new(set: AlphaSet, n_actions: usize) -> AlphaPolicy {
        AlphaPolicy { set, n_actions }
    }

    pub fn set(&self) -> &AlphaSet {
        &self.set
    }

    pub fn action(&self, b: &Belief) -> usize {
        self.set.best_vector(b).action_tag
    }
}

impl Policy for AlphaPolicy {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn action_distribution(&self, b: &Belief) -> Vec<f64> {
        let mut dist = vec![0.0; self.n_actions];
        dist[self.action(b)] = 1.0;
        dist
    }
}

/// The softmax policy over a Q-function bank:
/// `pi(a | b) = exp(Q_a(b)/lambda) / sum_j exp(Q_j(b)/lambda)`.
///
/// Temperatures below the hard-max threshold produce a one-hot greedy
/// distribution (lowest-index ties).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftPolicy {
    bank: QBank,
}

impl SoftPolicy {
    pub fn new(bank: QBank) -> SoftPolicy {
        SoftPolicy { bank }
    }

    pub fn bank(&self) -> &QBank {
        &self.bank
    }

    pub fn lambda(&self) -> f64 {
        self.bank.lambda()
    }

    /// Softmax of the per-action Q-values at `b`, max-shift stabilized.
    pub fn distribution(&self, b: &Belief) -> Vec<f64> {
        math::softmax_scaled(&self.bank.q_values(b), self.bank.lambda())
    }
}

impl Policy for SoftPolicy {
    fn n_actions(&self) -> usize {
        self.bank.n_actions()
    }

    fn action_distribution(&self, b: &Belief) -> Vec<f64> {
        self.distribution(b)
    }
}

/// Softmax over one-step lookahead Q-values of a plain alpha-vector value
/// function:
///
/// ```text
/// Q(b, a) = R(b, a) + gamma * sum_o P(o | b, a) * U_Gamma(Update(b, a, o))
/// ```
///
/// This is the post-hoc stochastic baseline built from an unregularized
/// solver's output; `lambda` is applied at evaluation time only.
pub struct SoftmaxLookaheadPolicy {
    model: Arc<TabularPomdp>,
    set: AlphaSet,
    lambda: f64,
}

impl SoftmaxLookaheadPolicy {
    pub fn new(model: Arc<TabularPomdp>, set: AlphaSet, lambda: f64) -> SoftmaxLookaheadPolicy {
        assert!(lambda >= 0.0);
        SoftmaxLookaheadPolicy { model, set, lambda }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// One-step lookahead Q-value for every action.
    pub fn q_values(&self, b: &Belief) -> Vec<f64> {
        let gamma = self.model.discount();
        (0..self.model.n_actions())
            .map(|a| {
                let mut q = self.model.belief_reward(b, a);
                for (_, marginal, next) in self.model.successor_beliefs(b, a) {
                    q += gamma * marginal * self.set.max_value(&next).0;
                }
                q
            })
            .collect()
    }
}

impl Policy for SoftmaxLookaheadPolicy {
    fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    fn action_distribution(&self, b: &Belief) -> Vec<f64> {
        math::softmax_scaled(&self.q_values(b), self.lambda)
    }
}

/// Mixture policy: with probability `epsilon` a uniformly random action,
/// otherwise the inner policy.
pub struct EpsilonRandom<P: Policy> {
    inner: P,
    epsilon: f64,
}

impl<P: Policy> EpsilonRandom<P> {
    pub fn new(inner: P, epsilon: f64) -> EpsilonRandom<P> {
        assert!((0.0..=1.0).contains(&epsilon));
        EpsilonRandom { inner, epsilon }
    }
}

impl<P: Policy> Policy for EpsilonRandom<P> {
    fn n_actions(&self) -> usize {
        self.inner.n_actions()
    }

    fn action_distribution(&self, b: &Belief) -> Vec<f64> {
        let n = self.n_actions();
        let uniform = self.epsilon / n as f64;
        self.inner
            .action_distribution(b)
            .into_iter()
            .map(|p| (1.0 - self.epsilon) * p + uniform)
            .collect()
    }
}

/// Uniformly random policy; mostly a test and baseline aid.
pub struct UniformPolicy {
    pub n_actions: usize,
}

impl Policy for UniformPolicy {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn action_distribution(&self, _b: &Belief) -> Vec<f64> {
        vec![1.0 / self.n_actions as f64; self.n_actions]
    }
}

pub const POLICY_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Pbvi,
    Erpbvi,
}

#[derive(Debug, Error)]
pub enum PolicyFileError {
    #[error("failed to decode policy file: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("unsupported policy file version {0}")]
    Version(u32),
    #[error("policy was trained on a different model (fingerprint {file} vs {model})")]
    FingerprintMismatch { file: String, model: String },
    #[error("malformed policy file: {0}")]
    Malformed(String),
}

/// Versioned JSON document holding a solved policy: the temperature, the
/// per-action vector lists (a single list for the unregularized solver), and
/// the fingerprint of the model it was trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyFile {
    pub version: u32,
    pub kind: PolicyKind,
    pub lambda: f64,
    pub model_fingerprint: String,
    pub sets: Vec<Vec<AlphaVector>>,
}

impl PolicyFile {
    pub fn from_soft(policy: &SoftPolicy, model: &TabularPomdp) -> PolicyFile {
        PolicyFile {
            version: POLICY_FILE_VERSION,
            kind: PolicyKind::Erpbvi,
            lambda: policy.lambda(),
            model_fingerprint: model.fingerprint(),
            sets: policy
                .bank()
                .sets()
                .iter()
                .map(|s| s.vectors().to_vec())
                .collect(),
        }
    }

    pub fn from_alpha(policy: &AlphaPolicy, model: &TabularPomdp) -> PolicyFile {
        PolicyFile {
            version: POLICY_FILE_VERSION,
            kind: PolicyKind::Pbvi,
            lambda: 0.0,
            model_fingerprint: model.fingerprint(),
            sets: vec![policy.set().vectors().to_vec()],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy file serializes")
    }

    pub fn from_json(text: &str) -> Result<PolicyFile, PolicyFileError> {
        let file: PolicyFile = serde_json::from_str(text)?;
        if file.version != POLICY_FILE_VERSION {
            return Err(PolicyFileError::Version(file.version));
        }
        if file.sets.is_empty() || file.sets.iter().any(|s| s.is_empty()) {
            return Err(PolicyFileError::Malformed(
                "policy file holds an empty vector list".into(),
            ));
        }
        Ok(file)
    }

    pub fn check_model(&self, model: &TabularPomdp) -> Result<(), PolicyFileError> {
        let fp = model.fingerprint();
        if fp != self.model_fingerprint {
            return Err(PolicyFileError::FingerprintMismatch {
                file: self.model_fingerprint.clone(),
                model: fp,
            });
        }
        Ok(())
    }

    /// Rebuilds the executable policy for the given model.
    pub fn into_policy(
        self,
        model: &TabularPomdp,
    ) -> Result<Box<dyn Policy + Send + Sync>, PolicyFileError> {
        self.check_model(model)?;
        match self.kind {
            PolicyKind::Pbvi => {
                if self.sets.len() != 1 {
                    return Err(PolicyFileError::Malformed(
                        "pbvi policy file must hold exactly one vector list".into(),
                    ));
                }
                let set = AlphaSet::new(self.sets.into_iter().next().unwrap());
                Ok(Box::new(AlphaPolicy::new(set, model.n_actions())))
            }
            PolicyKind::Erpbvi => {
                if self.sets.len() != model.n_actions() {
                    return Err(PolicyFileError::Malformed(format!(
                        "erpbvi policy file holds {} vector lists for {} actions",
                        self.sets.len(),
                        model.n_actions()
                    )));
                }
                let sets = self.sets.into_iter().map(AlphaSet::new).collect();
                Ok(Box::new(SoftPolicy::new(QBank::new(sets, self.lambda))))
            }
        }
    }
}
