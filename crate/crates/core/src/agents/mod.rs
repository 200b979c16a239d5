//! Off-policy continuous-control learners sharing one network substrate.
//!
//! All three agents expose the same surface: `act` (with or without
//! exploration) and `learn` on a replay batch. Bootstrap targets mask the
//! next-state value on terminal transitions, and target networks track their
//! learning copies through soft updates.

use crate::env::ActionCmd;
use crate::nn::{MlpNet, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use crate::replay::Transition;
use crate::seeding::derive_seed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

mod checkpoint;
pub mod ddpg;
pub mod gaussian;
pub mod sac;
pub mod td3;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use ddpg::DdpgAgent;
pub use sac::SacAgent;
pub use td3::Td3Agent;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("checkpoint does not match this agent: {0}")]
    BadCheckpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ddpg,
    Td3,
    Sac,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Td3 => "td3",
            Algorithm::Sac => "sac",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ddpg" => Ok(Algorithm::Ddpg),
            "td3" => Ok(Algorithm::Td3),
            "sac" => Ok(Algorithm::Sac),
            other => Err(AgentError::InvalidConfig(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

/// Hyperparameters shared across the learners; fields that only one algorithm
/// reads are ignored by the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub gamma: f64,
    /// Soft-update rate for target networks.
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Exploration noise std, m/s (DDPG, TD3).
    pub explore_sigma: f64,
    /// Target-policy smoothing noise std (TD3).
    pub smooth_sigma: f64,
    /// Clip bound on the smoothing noise (TD3).
    pub smooth_clip: f64,
    /// Actor updates once per this many critic updates (TD3).
    pub policy_delay: u32,
    /// Entropy temperature (SAC).
    pub entropy_alpha: f64,
    /// Optional linear anneal of the temperature: final value and the number
    /// of learn calls to reach it. Zero steps disables the schedule.
    pub alpha_final: f64,
    pub alpha_anneal_steps: u64,
    pub batch_size: usize,
    /// Hidden layer sizes for every actor and critic.
    pub hidden: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            explore_sigma: 0.1,
            smooth_sigma: 0.2,
            smooth_clip: 0.5,
            policy_delay: 2,
            entropy_alpha: 0.2,
            alpha_final: 0.2,
            alpha_anneal_steps: 0,
            batch_size: 128,
            hidden: vec![64, 64],
        }
    }
}

impl AgentConfig {
    // negated comparisons stay: `!(x > 0.0)` also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |m: &str| Err(AgentError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must be in (0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau must be in (0, 1]");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return fail("learning rates must be positive");
        }
        if !(self.explore_sigma > 0.0 && self.smooth_sigma > 0.0) {
            return fail("noise sigmas must be positive");
        }
        if self.policy_delay < 1 {
            return fail("policy_delay must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden sizes must be non-empty and positive");
        }
        Ok(())
    }

    pub(crate) fn actor_sizes(&self, outputs: usize) -> Vec<usize> {
        let mut sizes = vec![crate::agents::OBS_DIM];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(outputs);
        sizes
    }

    pub(crate) fn critic_sizes(&self, inputs: usize) -> Vec<usize> {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(1);
        sizes
    }
}

pub const OBS_DIM: usize = 6;
pub const ACTION_DIM: usize = 2;

/// Fresh actors start with a scaled-down output layer so early commands sit
/// near zero.
pub(crate) const ACTOR_HEAD_SCALE: f64 = 0.1;

// per-agent random stream tags
pub(crate) const STREAM_ACTOR: u64 = 0xA0;
pub(crate) const STREAM_CRITIC1: u64 = 0xC1;
pub(crate) const STREAM_CRITIC2: u64 = 0xC2;
pub(crate) const STREAM_VALUE: u64 = 0xF0;
pub(crate) const STREAM_NOISE: u64 = 0x4E;

pub(crate) fn stream_seed(seed: u64, stream: u64) -> u64 {
    derive_seed(seed, stream)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Replaces `net` with the named checkpoint blob after verifying the topology
/// matches.
pub(crate) fn restore_net(
    net: &mut MlpNet,
    blobs: &BTreeMap<String, Vec<u8>>,
    name: &str,
) -> Result<(), AgentError> {
    let bytes = blobs
        .get(name)
        .ok_or_else(|| AgentError::BadCheckpoint(format!("missing net '{name}'")))?;
    let loaded = MlpNet::from_bytes(bytes)
        .map_err(|e| AgentError::BadCheckpoint(format!("net '{name}': {e}")))?;
    if loaded.layer_sizes() != net.layer_sizes() || loaded.head() != net.head() {
        return Err(AgentError::BadCheckpoint(format!(
            "net '{name}' topology {:?} does not match configured {:?}",
            loaded.layer_sizes(),
            net.layer_sizes()
        )));
    }
    *net = loaded;
    Ok(())
}

/// Losses reported by one learn call. `critic1` is always present; the rest
/// depend on the algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub critic1: f64,
    pub critic2: Option<f64>,
    pub value: Option<f64>,
    pub actor: Option<f64>,
}

/// Common surface of the three learners.
pub trait Agent {
    fn algorithm(&self) -> Algorithm;
    fn config(&self) -> &AgentConfig;

    /// Policy action for an observation; exploration adds algorithm-specific
    /// noise. Emitted commands always satisfy `|a| <= 1` per axis.
    fn act(&mut self, obs: &[f64; OBS_DIM], explore: bool) -> ActionCmd;

    /// One gradient update from a replay batch.
    fn learn(&mut self, batch: &[Transition]) -> LossReport;

    fn params_finite(&self) -> bool;

    /// Named parameter blobs for checkpointing.
    fn net_blobs(&self) -> Vec<(String, Vec<u8>)>;

    /// Restores parameters from checkpoint blobs; every net must be present
    /// with a matching topology.
    fn load_net_blobs(&mut self, blobs: &BTreeMap<String, Vec<u8>>) -> Result<(), AgentError>;
}

pub fn build_agent(
    algorithm: Algorithm,
    cfg: &AgentConfig,
    seed: u64,
) -> Result<Box<dyn Agent>, AgentError> {
    Ok(match algorithm {
        Algorithm::Ddpg => Box::new(DdpgAgent::new(cfg, seed)?),
        Algorithm::Td3 => Box::new(Td3Agent::new(cfg, seed)?),
        Algorithm::Sac => Box::new(SacAgent::new(cfg, seed)?),
    })
}

/// One-step bootstrap: `r + gamma * next_value`, cut off at terminals.
pub fn bootstrap_target(reward: f64, gamma: f64, next_value: f64, done: bool) -> f64 {
    reward + if done { 0.0 } else { gamma * next_value }
}

/// Clipped double-Q bootstrap: the smaller of two target critics feeds the
/// backup, countering overestimation.
pub fn twin_min_target(reward: f64, gamma: f64, q1: f64, q2: f64, done: bool) -> f64 {
    bootstrap_target(reward, gamma, q1.min(q2), done)
}

/// Entropy target with a single policy sample: `q_min - alpha * log_prob`.
pub fn entropy_value_target(q_min: f64, alpha: f64, log_prob: f64) -> f64 {
    q_min - alpha * log_prob
}

/// Shannon entropy of a discrete distribution, nats. Diagnostic helper; the
/// continuous learners work with log-densities directly.
pub fn entropy(probabilities: &[f64]) -> Result<f64, AgentError> {
    if probabilities.is_empty() {
        return Err(AgentError::InvalidDistribution("empty vector".into()));
    }
    let mut sum = 0.0;
    for &p in probabilities {
        if !p.is_finite() || p < 0.0 {
            return Err(AgentError::InvalidDistribution(format!(
                "probability {p} out of range"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AgentError::InvalidDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    Ok(probabilities
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum())
}

pub(crate) fn concat_sa(state: &[f64; OBS_DIM], action: &[f64; ACTION_DIM]) -> [f64; 8] {
    [
        state[0], state[1], state[2], state[3], state[4], state[5], action[0], action[1],
    ]
}

/// Accumulates mean-squared-error gradients of `net` against per-sample
/// targets without stepping the optimizer; returns the loss.
pub(crate) fn accumulate_mse_grads<const N: usize>(
    net: &mut MlpNet,
    samples: &[([f64; N], f64)],
) -> f64 {
    let scale = 1.0 / samples.len() as f64;
    net.zero_grads();
    let mut loss = 0.0;
    for (input, target) in samples {
        let (out, trace) = net.forward_trace(input);
        let err = out[0] - target;
        loss += err * err * scale;
        net.backward(&trace, &[2.0 * err * scale]);
    }
    loss
}

/// Mean-squared-error regression of `net` toward per-sample targets, one Adam
/// step, returning the pre-update loss.
pub(crate) fn regress_to_targets<const N: usize>(
    net: &mut MlpNet,
    samples: &[([f64; N], f64)],
    lr: f64,
) -> f64 {
    let loss = accumulate_mse_grads(net, samples);
    net.adam_step(lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
    loss
}

/// Deterministic-policy-gradient step: ascend the critic's value at the
/// actor's action by chaining the critic's action gradient into the actor.
/// Returns the (negated-value) actor loss.
pub(crate) fn deterministic_actor_update(
    actor: &mut MlpNet,
    critic: &MlpNet,
    states: impl Iterator<Item = [f64; OBS_DIM]>,
    count: usize,
    lr: f64,
) -> f64 {
    let scale = 1.0 / count as f64;
    actor.zero_grads();
    let mut loss = 0.0;
    for state in states {
        let (action, actor_trace) = actor.forward_trace(&state);
        let (q, critic_trace) = critic.forward_trace(&concat_sa(&state, &[action[0], action[1]]));
        loss -= q[0] * scale;
        let dq_dinput = critic.input_gradient(&critic_trace, &[1.0]);
        // gradient ascent on Q: descend on -Q through the action entries
        let upstream = [-dq_dinput[OBS_DIM] * scale, -dq_dinput[OBS_DIM + 1] * scale];
        actor.backward(&actor_trace, &upstream);
    }
    actor.adam_step(lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_target_arithmetic() {
        assert!((bootstrap_target(0.5, 0.9, 1.0, false) - 1.4).abs() < 1e-15);
        assert!((bootstrap_target(1.0, 0.99, 2.0, false) - 2.98).abs() < 1e-15);
        assert_eq!(bootstrap_target(0.5, 0.9, 123.0, true), 0.5);
        assert_eq!(bootstrap_target(1.0, 0.99, 2.0, true), 1.0);
        assert_eq!(bootstrap_target(2.0, 0.0, 5.0, false), 2.0);
    }

    #[test]
    fn twin_min_uses_the_smaller_critic() {
        assert_eq!(twin_min_target(0.0, 1.0, 2.0, 3.0, false), 2.0);
        assert_eq!(twin_min_target(0.0, 1.0, 3.0, 2.0, false), 2.0);
        assert_eq!(twin_min_target(1.0, 0.5, 2.0, 3.0, true), 1.0);
    }

    #[test]
    fn twin_min_never_exceeds_single_critic_targets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let (r, q1, q2) = (
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-100.0..100.0),
                rng.gen_range(-100.0..100.0),
            );
            let y = twin_min_target(r, 0.99, q1, q2, false);
            assert!(y <= bootstrap_target(r, 0.99, q1, false));
            assert!(y <= bootstrap_target(r, 0.99, q2, false));
        }
    }

    #[test]
    fn entropy_value_target_examples() {
        assert!((entropy_value_target(1.0, 0.2, -1.0) - 1.2).abs() < 1e-15);
        assert_eq!(entropy_value_target(3.5, 0.0, -7.0), 3.5);
        // more entropy (more negative log-prob) raises the target
        assert!(entropy_value_target(1.0, 0.2, -2.0) > entropy_value_target(1.0, 0.2, -1.0));
    }

    #[test]
    fn entropy_point_values() {
        let half = entropy(&[0.5, 0.5]).unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        for n in [2usize, 5, 17] {
            let uniform = vec![1.0 / n as f64; n];
            let h = entropy(&uniform).unwrap();
            assert!((h - (n as f64).ln()).abs() < 1e-12);
            // uniform maximizes entropy over the simplex
            let delta = 0.5 / n as f64;
            let mut skewed = uniform.clone();
            skewed[0] += delta;
            skewed[1] -= delta;
            assert!(entropy(&skewed).unwrap() < h);
        }
    }

    #[test]
    fn entropy_rejects_invalid_simplexes() {
        assert!(entropy(&[]).is_err());
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.1, 1.1]).is_err());
        assert!(entropy(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let bad = [
            AgentConfig {
                gamma: 0.0,
                ..AgentConfig::default()
            },
            AgentConfig {
                tau: 1.5,
                ..AgentConfig::default()
            },
            AgentConfig {
                policy_delay: 0,
                ..AgentConfig::default()
            },
            AgentConfig {
                hidden: vec![],
                ..AgentConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
        assert!(AgentConfig::default().validate().is_ok());
    }
}
