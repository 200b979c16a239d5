//! Soft actor-critic, five-network layout: a squashed-Gaussian actor, twin
//! learning Q-nets, and a state-value net shadowed by a soft-updated target.
//!
//! One learn call works from a single parameter snapshot: Q1/Q2 regress to
//! `r + gamma * V'(s')`, V regresses to `min(Q1, Q2)` at a fresh policy sample
//! minus the entropy term, and the actor ascends `Q1 - alpha * log pi` through
//! the reparameterized sample. All four optimizers then step and the V target
//! soft-updates.

use super::gaussian::{squash, LOG_STD_MAX, LOG_STD_MIN};
use super::{
    accumulate_mse_grads, bootstrap_target, concat_sa, entropy_value_target, Agent, AgentConfig,
    AgentError, Algorithm, LossReport, ACTION_DIM, ACTOR_HEAD_SCALE, OBS_DIM, STREAM_ACTOR,
    STREAM_CRITIC1, STREAM_CRITIC2, STREAM_NOISE, STREAM_VALUE,
};
use crate::env::ActionCmd;
use crate::nn::{MlpNet, OutputActivation, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use crate::replay::Transition;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

pub struct SacAgent {
    cfg: AgentConfig,
    /// Outputs per action axis: two means then two raw log-stds.
    actor: MlpNet,
    q1: MlpNet,
    q2: MlpNet,
    value: MlpNet,
    value_target: MlpNet,
    noise: ChaCha8Rng,
    learn_calls: u64,
}

impl SacAgent {
    pub fn new(cfg: &AgentConfig, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        let mut actor = MlpNet::new(
            &cfg.actor_sizes(2 * ACTION_DIM),
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_ACTOR),
        );
        actor.scale_output_layer(ACTOR_HEAD_SCALE);
        let critic_sizes = cfg.critic_sizes(OBS_DIM + ACTION_DIM);
        let q1 = MlpNet::new(
            &critic_sizes,
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_CRITIC1),
        );
        let q2 = MlpNet::new(
            &critic_sizes,
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_CRITIC2),
        );
        let value = MlpNet::new(
            &cfg.critic_sizes(OBS_DIM),
            OutputActivation::Linear,
            super::stream_seed(seed, STREAM_VALUE),
        );
        Ok(Self {
            cfg: cfg.clone(),
            actor,
            q1,
            q2,
            value_target: value.clone(),
            value,
            noise: super::stream_rng(seed, STREAM_NOISE),
            learn_calls: 0,
        })
    }

    /// Entropy temperature, following the optional linear anneal schedule.
    pub fn current_alpha(&self) -> f64 {
        if self.cfg.alpha_anneal_steps == 0 {
            return self.cfg.entropy_alpha;
        }
        let progress = (self.learn_calls as f64 / self.cfg.alpha_anneal_steps as f64).min(1.0);
        self.cfg.entropy_alpha + (self.cfg.alpha_final - self.cfg.entropy_alpha) * progress
    }

    /// Samples an action and its log-probability. With `explore` off the
    /// distribution's center `tanh(mean)` is returned instead.
    pub fn sample_action(&mut self, obs: &[f64; OBS_DIM], explore: bool) -> (ActionCmd, f64) {
        let head = self.actor.forward(obs);
        let mut action = [0.0; ACTION_DIM];
        let mut log_prob = 0.0;
        for i in 0..ACTION_DIM {
            let noise: f64 = if explore {
                StandardNormal.sample(&mut self.noise)
            } else {
                0.0
            };
            let s = squash(head[i], head[ACTION_DIM + i], noise);
            action[i] = s.action;
            log_prob += s.log_prob;
        }
        (ActionCmd::new(action[0], action[1]), log_prob)
    }
}

impl Agent for SacAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Sac
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act(&mut self, obs: &[f64; OBS_DIM], explore: bool) -> ActionCmd {
        self.sample_action(obs, explore).0
    }

    fn learn(&mut self, batch: &[Transition]) -> LossReport {
        assert!(!batch.is_empty(), "learn needs a non-empty batch");
        let alpha = self.current_alpha();
        let gamma = self.cfg.gamma;
        let scale = 1.0 / batch.len() as f64;

        // one standard-normal draw per action axis per element, batch order
        let eps: Vec<[f64; ACTION_DIM]> = batch
            .iter()
            .map(|_| {
                [
                    StandardNormal.sample(&mut self.noise),
                    StandardNormal.sample(&mut self.noise),
                ]
            })
            .collect();

        // Q targets bootstrap through the value *target* network
        let q_samples: Vec<([f64; 8], f64)> = batch
            .iter()
            .map(|t| {
                let v_next = self.value_target.forward(&t.next_state)[0];
                let y = bootstrap_target(t.reward, gamma, v_next, t.done);
                (concat_sa(&t.state, &t.action), y)
            })
            .collect();
        let q1_loss = accumulate_mse_grads(&mut self.q1, &q_samples);
        let q2_loss = accumulate_mse_grads(&mut self.q2, &q_samples);

        // fresh policy samples feed both the V target and the actor objective
        self.actor.zero_grads();
        let mut v_samples = Vec::with_capacity(batch.len());
        let mut actor_loss = 0.0;
        for (t, e) in batch.iter().zip(&eps) {
            let (head, actor_trace) = self.actor.forward_trace(&t.state);
            let mut action = [0.0; ACTION_DIM];
            let mut log_prob = 0.0;
            let mut per_dim = Vec::with_capacity(ACTION_DIM);
            for i in 0..ACTION_DIM {
                let s = squash(head[i], head[ACTION_DIM + i], e[i]);
                action[i] = s.action;
                log_prob += s.log_prob;
                per_dim.push(s);
            }
            let sa = concat_sa(&t.state, &action);
            let (q1_out, q1_trace) = self.q1.forward_trace(&sa);
            let q2_out = self.q2.forward(&sa)[0];
            let q_min = q1_out[0].min(q2_out);
            v_samples.push((t.state, entropy_value_target(q_min, alpha, log_prob)));

            // reparameterized ascent on Q1(s, a) - alpha * log pi(a | s)
            actor_loss += (alpha * log_prob - q1_out[0]) * scale;
            let dq_dinput = self.q1.input_gradient(&q1_trace, &[1.0]);
            let mut upstream = [0.0; 2 * ACTION_DIM];
            for i in 0..ACTION_DIM {
                let s = &per_dim[i];
                let t_sq = 1.0 - s.action * s.action;
                // d log pi / du through the squash correction
                let dcorr_du = 2.0 * s.action * t_sq / (t_sq + super::gaussian::SQUASH_EPS);
                let dl_du = -dq_dinput[OBS_DIM + i] * t_sq + alpha * dcorr_du;
                upstream[i] = dl_du * scale;
                let raw = head[ACTION_DIM + i];
                // the clamp gates the log-std gradient
                if raw > LOG_STD_MIN && raw < LOG_STD_MAX {
                    let sigma = s.log_std.exp();
                    upstream[ACTION_DIM + i] = (dl_du * sigma * e[i] - alpha) * scale;
                }
            }
            self.actor.backward(&actor_trace, &upstream);
        }
        let v_loss = accumulate_mse_grads(&mut self.value, &v_samples);

        self.q1
            .adam_step(self.cfg.critic_lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        self.q2
            .adam_step(self.cfg.critic_lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        self.value
            .adam_step(self.cfg.critic_lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        self.actor
            .adam_step(self.cfg.actor_lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);

        self.value_target
            .soft_update_from(&self.value, self.cfg.tau)
            .expect("value target shares the value topology");
        self.learn_calls += 1;

        LossReport {
            critic1: q1_loss,
            critic2: Some(q2_loss),
            value: Some(v_loss),
            actor: Some(actor_loss),
        }
    }

    fn params_finite(&self) -> bool {
        [
            &self.actor,
            &self.q1,
            &self.q2,
            &self.value,
            &self.value_target,
        ]
        .iter()
        .all(|n| n.params_finite())
    }

    fn net_blobs(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            ("actor".into(), self.actor.to_bytes()),
            ("q1".into(), self.q1.to_bytes()),
            ("q2".into(), self.q2.to_bytes()),
            ("value".into(), self.value.to_bytes()),
            ("value_target".into(), self.value_target.to_bytes()),
        ]
    }

    fn load_net_blobs(&mut self, blobs: &BTreeMap<String, Vec<u8>>) -> Result<(), AgentError> {
        super::restore_net(&mut self.actor, blobs, "actor")?;
        super::restore_net(&mut self.q1, blobs, "q1")?;
        super::restore_net(&mut self.q2, blobs, "q2")?;
        super::restore_net(&mut self.value, blobs, "value")?;
        super::restore_net(&mut self.value_target, blobs, "value_target")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{ddpg::DdpgAgent, stream_rng};
    use rand::{Rng, SeedableRng};

    fn random_batch(n: usize, seed: u64) -> Vec<Transition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut state = [0.0; 6];
                let mut next_state = [0.0; 6];
                for v in state.iter_mut().chain(next_state.iter_mut()) {
                    *v = rng.gen_range(-2.0..2.0);
                }
                Transition {
                    state,
                    action: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    reward: rng.gen_range(-30.0..30.0),
                    next_state,
                    done: rng.gen_bool(0.1),
                }
            })
            .collect()
    }

    #[test]
    fn greedy_actions_are_the_squashed_mean() {
        let mut agent = SacAgent::new(&AgentConfig::default(), 1).unwrap();
        let obs = [0.5, -0.5, 1.0, 0.0, 0.2, -0.4];
        let head = agent.actor.forward(&obs);
        let (a, log_prob) = agent.sample_action(&obs, false);
        assert_eq!(a.ax, head[0].tanh());
        assert_eq!(a.ay, head[1].tanh());
        assert!(log_prob.is_finite());
        // repeated greedy calls are identical (no rng consumed)
        assert_eq!(agent.act(&obs, false), agent.act(&obs, false));
    }

    #[test]
    fn sampled_log_probs_stay_finite() {
        let mut agent = SacAgent::new(&AgentConfig::default(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let mut obs = [0.0; 6];
            for v in obs.iter_mut() {
                *v = rng.gen_range(-5.0..5.0);
            }
            let (a, log_prob) = agent.sample_action(&obs, true);
            assert!(a.ax.abs() < 1.0 && a.ay.abs() < 1.0);
            assert!(log_prob.is_finite());
        }
    }

    #[test]
    fn alpha_anneal_interpolates_linearly() {
        let cfg = AgentConfig {
            entropy_alpha: 0.2,
            alpha_final: 0.0,
            alpha_anneal_steps: 100,
            ..AgentConfig::default()
        };
        let mut agent = SacAgent::new(&cfg, 4).unwrap();
        assert_eq!(agent.current_alpha(), 0.2);
        agent.learn_calls = 50;
        assert!((agent.current_alpha() - 0.1).abs() < 1e-12);
        agent.learn_calls = 100;
        assert_eq!(agent.current_alpha(), 0.0);
        agent.learn_calls = 500;
        assert_eq!(agent.current_alpha(), 0.0);
    }

    #[test]
    fn value_loss_matches_an_independent_reimplementation() {
        let seed = 2024;
        let cfg = AgentConfig::default();
        let mut agent = SacAgent::new(&cfg, seed).unwrap();
        let batch = random_batch(32, 5);

        // snapshot the pre-update networks and replay the noise stream
        let (actor, q1, q2, value) = (
            agent.actor.clone(),
            agent.q1.clone(),
            agent.q2.clone(),
            agent.value.clone(),
        );
        let mut noise = stream_rng(seed, STREAM_NOISE);
        let mut expected = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for t in &batch {
            let e: [f64; 2] = [
                StandardNormal.sample(&mut noise),
                StandardNormal.sample(&mut noise),
            ];
            let head = actor.forward(&t.state);
            let mut action = [0.0; 2];
            let mut log_prob = 0.0;
            for i in 0..2 {
                let s = squash(head[i], head[2 + i], e[i]);
                action[i] = s.action;
                log_prob += s.log_prob;
            }
            let sa = concat_sa(&t.state, &action);
            let q_min = q1.forward(&sa)[0].min(q2.forward(&sa)[0]);
            let target = entropy_value_target(q_min, cfg.entropy_alpha, log_prob);
            let err = value.forward(&t.state)[0] - target;
            expected += err * err * scale;
        }

        let report = agent.learn(&batch);
        let got = report.value.unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "reported {got} vs oracle {expected}"
        );
    }

    #[test]
    fn one_learn_step_reduces_combined_q_loss() {
        let mut agent = SacAgent::new(&AgentConfig::default(), 6).unwrap();
        let batch = random_batch(64, 7);
        let eval = |agent: &SacAgent| -> f64 {
            batch
                .iter()
                .map(|t| {
                    let v_next = agent.value_target.forward(&t.next_state)[0];
                    let y = bootstrap_target(t.reward, agent.cfg.gamma, v_next, t.done);
                    let sa = concat_sa(&t.state, &t.action);
                    let e1 = agent.q1.forward(&sa)[0] - y;
                    let e2 = agent.q2.forward(&sa)[0] - y;
                    e1 * e1 + e2 * e2
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        let before = eval(&agent);
        let report = agent.learn(&batch);
        assert!((report.critic1 + report.critic2.unwrap() - before).abs() < 1e-9);
        let after = eval(&agent);
        assert!(after < before, "combined Q loss {before} -> {after}");
    }

    #[test]
    fn value_target_initializes_equal_and_tracks_softly() {
        let mut agent = SacAgent::new(&AgentConfig::default(), 8).unwrap();
        assert_eq!(agent.value.flat_params(), agent.value_target.flat_params());
        let batch = random_batch(16, 9);
        agent.learn(&batch);
        let v = agent.value.flat_params();
        let vt = agent.value_target.flat_params();
        assert_ne!(v, vt);
        // target lies between its old value and the learning net
        let moved: f64 = v
            .iter()
            .zip(&vt)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(moved > 0.0);
    }

    #[test]
    fn learn_is_bitwise_reproducible() {
        let batch = random_batch(32, 10);
        let run = || {
            let mut agent = SacAgent::new(&AgentConfig::default(), 11).unwrap();
            agent.learn(&batch);
            agent.learn(&batch);
            (
                agent.actor.flat_params(),
                agent.q1.flat_params(),
                agent.value.flat_params(),
            )
        };
        assert_eq!(run(), run());
    }

    /// With the entropy term off and the policy collapsed onto its mean, the
    /// actor update must match the deterministic-policy-gradient rule used by
    /// DDPG, chained through the same tanh.
    #[test]
    fn zero_alpha_deterministic_limit_matches_ddpg_direction() {
        let hidden = vec![8, 8];
        let cfg = AgentConfig {
            hidden: hidden.clone(),
            entropy_alpha: 0.0,
            alpha_final: 0.0,
            ..AgentConfig::default()
        };

        let ddpg = DdpgAgent::new(&cfg, 21).unwrap();
        let (d_actor, _, d_critic, _) = ddpg.nets();
        let mut agent = SacAgent::new(&cfg, 22).unwrap();

        // hidden layers copied verbatim; mean head rows mirror the DDPG head;
        // log-std rows pinned far below the clamp so std ~ e^-20
        let h = *hidden.last().unwrap();
        let shared = 6 * hidden[0] + hidden[0] + hidden[0] * hidden[1] + hidden[1];
        for i in 0..shared {
            agent.actor.set_param(i, d_actor.param(i));
        }
        for r in 0..2 {
            for c in 0..h {
                agent
                    .actor
                    .set_param(shared + r * h + c, d_actor.param(shared + r * h + c));
            }
            agent
                .actor
                .set_param(shared + 4 * h + r, d_actor.param(shared + 2 * h + r));
        }
        for r in 2..4 {
            for c in 0..h {
                agent.actor.set_param(shared + r * h + c, 0.0);
            }
            agent.actor.set_param(shared + 4 * h + r, -30.0);
        }
        for i in 0..d_critic.param_count() {
            agent.q1.set_param(i, d_critic.param(i));
        }

        let batch = random_batch(16, 23);
        let scale = 1.0 / batch.len() as f64;

        // expected gradient by the deterministic rule on the snapshot nets
        let mut expected = agent.actor.clone();
        expected.zero_grads();
        let pre = agent.actor.flat_params();
        let critic = agent.q1.clone();
        for t in &batch {
            let (head, trace) = expected.forward_trace(&t.state);
            let a = [head[0].tanh(), head[1].tanh()];
            let (_, qtrace) = critic.forward_trace(&concat_sa(&t.state, &a));
            let dq = critic.input_gradient(&qtrace, &[1.0]);
            let upstream = [
                -dq[6] * (1.0 - a[0] * a[0]) * scale,
                -dq[7] * (1.0 - a[1] * a[1]) * scale,
                0.0,
                0.0,
            ];
            expected.backward(&trace, &upstream);
        }

        agent.learn(&batch);

        let lr = cfg.actor_lr;
        let shared_and_mean =
            |i: usize| i < shared + 2 * h || (i >= shared + 4 * h && i < shared + 4 * h + 2);
        for (i, &pre_param) in pre.iter().enumerate() {
            let g = expected.grad(i);
            let want = pre_param - lr * g / (g.abs() + crate::nn::ADAM_EPS);
            let got = agent.actor.param(i);
            if shared_and_mean(i) {
                assert!(
                    (got - want).abs() < 1e-6,
                    "param {i}: got {got}, want {want} (grad {g})"
                );
            } else {
                // log-std rows carry only the vanishing reparameterization term
                assert!((got - pre_param).abs() <= lr + 1e-12);
            }
        }
    }
}
