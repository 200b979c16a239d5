//! Deep deterministic policy gradient.
//!
//! One actor, one critic, each shadowed by a target copy. The critic regresses
//! to `r + gamma * Q'(s', mu'(s'))`; the actor ascends the critic's value at
//! its own action; both targets soft-update every learn call.

use super::{
    concat_sa, deterministic_actor_update, regress_to_targets, Agent, AgentConfig, AgentError,
    Algorithm, LossReport, ACTION_DIM, ACTOR_HEAD_SCALE, OBS_DIM, STREAM_ACTOR, STREAM_CRITIC1,
    STREAM_NOISE,
};
use crate::env::ActionCmd;
use crate::nn::{MlpNet, OutputActivation};
use crate::replay::Transition;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

pub struct DdpgAgent {
    cfg: AgentConfig,
    actor: MlpNet,
    actor_target: MlpNet,
    critic: MlpNet,
    critic_target: MlpNet,
    noise: ChaCha8Rng,
}

impl DdpgAgent {
    pub fn new(cfg: &AgentConfig, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        let mut actor = MlpNet::new(
            &cfg.actor_sizes(ACTION_DIM),
            OutputActivation::Tanh,
            super::stream_seed(seed, STREAM_ACTOR),
        );
        actor.scale_output_layer(ACTOR_HEAD_SCALE);
        let critic = MlpNet::new(
            &cfg.critic_sizes(OBS_DIM + ACTION_DIM),
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_CRITIC1),
        );
        // targets start as exact copies of the learning networks
        Ok(Self {
            cfg: cfg.clone(),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            noise: super::stream_rng(seed, STREAM_NOISE),
        })
    }

    #[cfg(test)]
    pub(crate) fn nets(&self) -> (&MlpNet, &MlpNet, &MlpNet, &MlpNet) {
        (
            &self.actor,
            &self.actor_target,
            &self.critic,
            &self.critic_target,
        )
    }
}

impl Agent for DdpgAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ddpg
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act(&mut self, obs: &[f64; OBS_DIM], explore: bool) -> ActionCmd {
        let mut a = self.actor.forward(obs);
        if explore {
            for v in a.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut self.noise);
                *v += self.cfg.explore_sigma * n;
            }
        }
        ActionCmd::new(a[0], a[1]).clamped(1.0)
    }

    fn learn(&mut self, batch: &[Transition]) -> LossReport {
        assert!(!batch.is_empty(), "learn needs a non-empty batch");
        let cfg = &self.cfg;

        let samples: Vec<([f64; 8], f64)> = batch
            .iter()
            .map(|t| {
                let next_action = self.actor_target.forward(&t.next_state);
                let q_next = self
                    .critic_target
                    .forward(&concat_sa(&t.next_state, &[next_action[0], next_action[1]]))[0];
                let y = super::bootstrap_target(t.reward, cfg.gamma, q_next, t.done);
                (concat_sa(&t.state, &t.action), y)
            })
            .collect();
        let critic_loss = regress_to_targets(&mut self.critic, &samples, cfg.critic_lr);

        let actor_loss = deterministic_actor_update(
            &mut self.actor,
            &self.critic,
            batch.iter().map(|t| t.state),
            batch.len(),
            cfg.actor_lr,
        );

        self.critic_target
            .soft_update_from(&self.critic, cfg.tau)
            .expect("critic target shares the critic topology");
        self.actor_target
            .soft_update_from(&self.actor, cfg.tau)
            .expect("actor target shares the actor topology");

        LossReport {
            critic1: critic_loss,
            critic2: None,
            value: None,
            actor: Some(actor_loss),
        }
    }

    fn params_finite(&self) -> bool {
        self.actor.params_finite()
            && self.actor_target.params_finite()
            && self.critic.params_finite()
            && self.critic_target.params_finite()
    }

    fn net_blobs(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            ("actor".into(), self.actor.to_bytes()),
            ("actor_target".into(), self.actor_target.to_bytes()),
            ("critic".into(), self.critic.to_bytes()),
            ("critic_target".into(), self.critic_target.to_bytes()),
        ]
    }

    fn load_net_blobs(&mut self, blobs: &BTreeMap<String, Vec<u8>>) -> Result<(), AgentError> {
        super::restore_net(&mut self.actor, blobs, "actor")?;
        super::restore_net(&mut self.actor_target, blobs, "actor_target")?;
        super::restore_net(&mut self.critic, blobs, "critic")?;
        super::restore_net(&mut self.critic_target, blobs, "critic_target")?;
        Ok(())
    }
}
