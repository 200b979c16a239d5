//! Greedy evaluation of a checkpoint: exploration off, success tallies on.

use super::{HarnessError, STREAM_AGENT, STREAM_ENV};
use crate::agents::load_checkpoint;
use crate::env::LandingZone;
use crate::seeding::derive_seed;
use crate::task::{Environment, ShapedEnv};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub episodes: u32,
    /// Fraction of episodes ending on the pad (red or green).
    pub success_rate: f64,
    /// Fraction of episodes ending on the red center.
    pub red_rate: f64,
    pub mean_return: f64,
    /// Mean speed magnitude at the terminal state, m/s.
    pub mean_terminal_speed: f64,
    pub mean_steps: f64,
}

pub fn evaluate(checkpoint: &Path, episodes: u32, seed: u64) -> Result<EvalSummary, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::InvalidConfig(
            "evaluation needs at least one episode".into(),
        ));
    }
    let (mut agent, scenario) = load_checkpoint(checkpoint, derive_seed(seed, STREAM_AGENT))?;
    let mut env = ShapedEnv::new(scenario, derive_seed(seed, STREAM_ENV))?;

    let mut successes = 0u32;
    let mut reds = 0u32;
    let mut total_return = 0.0;
    let mut total_speed = 0.0;
    let mut total_steps = 0u64;
    for _ in 0..episodes {
        let state = env.reset(None)?;
        let mut obs = state.observation();
        let mut ep_return = 0.0;
        loop {
            let cmd = agent.act(&obs, false);
            let out = env.step(cmd)?;
            ep_return += out.reward;
            obs = out.next_state.observation();
            if out.done {
                match out.zone {
                    Some(LandingZone::Red) => {
                        successes += 1;
                        reds += 1;
                    }
                    Some(LandingZone::Green) => successes += 1,
                    _ => {}
                }
                total_speed += out.next_state.speed();
                total_steps += env.steps() as u64;
                break;
            }
        }
        total_return += ep_return;
    }

    let n = episodes as f64;
    Ok(EvalSummary {
        episodes,
        success_rate: successes as f64 / n,
        red_rate: reds as f64 / n,
        mean_return: total_return / n,
        mean_terminal_speed: total_speed / n,
        mean_steps: total_steps as f64 / n,
    })
}
