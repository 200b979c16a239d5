//! Twin delayed deep deterministic policy gradient.
//!
//! Two critics regress to a shared target built from the smaller of the two
//! target critics at a smoothed target-policy action; the actor and all three
//! targets update only every `policy_delay`-th learn call.

use super::{
    concat_sa, deterministic_actor_update, regress_to_targets, twin_min_target, Agent, AgentConfig,
    AgentError, Algorithm, LossReport, ACTION_DIM, ACTOR_HEAD_SCALE, OBS_DIM, STREAM_ACTOR,
    STREAM_CRITIC1, STREAM_CRITIC2, STREAM_NOISE,
};
use crate::env::ActionCmd;
use crate::nn::{MlpNet, OutputActivation};
use crate::replay::Transition;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

pub struct Td3Agent {
    cfg: AgentConfig,
    actor: MlpNet,
    actor_target: MlpNet,
    critic1: MlpNet,
    critic2: MlpNet,
    critic1_target: MlpNet,
    critic2_target: MlpNet,
    noise: ChaCha8Rng,
    learn_calls: u64,
}

impl Td3Agent {
    pub fn new(cfg: &AgentConfig, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        let mut actor = MlpNet::new(
            &cfg.actor_sizes(ACTION_DIM),
            OutputActivation::Tanh,
            super::stream_seed(seed, STREAM_ACTOR),
        );
        actor.scale_output_layer(ACTOR_HEAD_SCALE);
        let critic_sizes = cfg.critic_sizes(OBS_DIM + ACTION_DIM);
        let critic1 = MlpNet::new(
            &critic_sizes,
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_CRITIC1),
        );
        let critic2 = MlpNet::new(
            &critic_sizes,
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_CRITIC2),
        );
        Ok(Self {
            cfg: cfg.clone(),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            noise: super::stream_rng(seed, STREAM_NOISE),
            learn_calls: 0,
        })
    }

    /// Smoothed target action: target-policy output plus clipped Gaussian
    /// noise, clamped back into the action box.
    fn smoothed_target_action(&mut self, next_state: &[f64; OBS_DIM]) -> [f64; ACTION_DIM] {
        let mut a = self.actor_target.forward(next_state);
        for v in a.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut self.noise);
            let eps =
                (self.cfg.smooth_sigma * n).clamp(-self.cfg.smooth_clip, self.cfg.smooth_clip);
            *v = (*v + eps).clamp(-1.0, 1.0);
        }
        [a[0], a[1]]
    }
}

impl Agent for Td3Agent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Td3
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
        self.learn_calls += 1;
        let (gamma, tau) = (self.cfg.gamma, self.cfg.tau);

        let mut samples1 = Vec::with_capacity(batch.len());
        let mut samples2 = Vec::with_capacity(batch.len());
        for t in batch {
            let smoothed = self.smoothed_target_action(&t.next_state);
            let sa_next = concat_sa(&t.next_state, &smoothed);
            let q1 = self.critic1_target.forward(&sa_next)[0];
            let q2 = self.critic2_target.forward(&sa_next)[0];
            let y = twin_min_target(t.reward, gamma, q1, q2, t.done);
            let sa = concat_sa(&t.state, &t.action);
            samples1.push((sa, y));
            samples2.push((sa, y));
        }
        let loss1 = regress_to_targets(&mut self.critic1, &samples1, self.cfg.critic_lr);
        let loss2 = regress_to_targets(&mut self.critic2, &samples2, self.cfg.critic_lr);

        // delayed policy update: actor and targets move on every
        // policy_delay-th call only
        let mut actor_loss = None;
        if self
            .learn_calls
            .is_multiple_of(self.cfg.policy_delay as u64)
        {
            actor_loss = Some(deterministic_actor_update(
                &mut self.actor,
                &self.critic1,
                batch.iter().map(|t| t.state),
                batch.len(),
                self.cfg.actor_lr,
            ));
            self.actor_target
                .soft_update_from(&self.actor, tau)
                .expect("actor target shares the actor topology");
            self.critic1_target
                .soft_update_from(&self.critic1, tau)
                .expect("critic1 target shares the critic topology");
            self.critic2_target
                .soft_update_from(&self.critic2, tau)
                .expect("critic2 target shares the critic topology");
        }

        LossReport {
            critic1: loss1,
            critic2: Some(loss2),
            value: None,
            actor: actor_loss,
        }
    }

    fn params_finite(&self) -> bool {
        [
            &self.actor,
            &self.actor_target,
            &self.critic1,
            &self.critic2,
            &self.critic1_target,
            &self.critic2_target,
        ]
        .iter()
        .all(|n| n.params_finite())
    }

    fn net_blobs(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            ("actor".into(), self.actor.to_bytes()),
            ("actor_target".into(), self.actor_target.to_bytes()),
            ("critic1".into(), self.critic1.to_bytes()),
            ("critic2".into(), self.critic2.to_bytes()),
            ("critic1_target".into(), self.critic1_target.to_bytes()),
            ("critic2_target".into(), self.critic2_target.to_bytes()),
        ]
    }

    fn load_net_blobs(&mut self, blobs: &BTreeMap<String, Vec<u8>>) -> Result<(), AgentError> {
        super::restore_net(&mut self.actor, blobs, "actor")?;
        super::restore_net(&mut self.actor_target, blobs, "actor_target")?;
        super::restore_net(&mut self.critic1, blobs, "critic1")?;
        super::restore_net(&mut self.critic2, blobs, "critic2")?;
        super::restore_net(&mut self.critic1_target, blobs, "critic1_target")?;
        super::restore_net(&mut self.critic2_target, blobs, "critic2_target")?;
        Ok(())
    }
}
