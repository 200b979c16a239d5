//! The seeded training loop.
//!
//! One run: reset, act with exploration, step, shape, store, and — once the
//! replay warm-up is filled — one gradient update per environment step.
//! Every episode appends a metrics row; checkpoints land every
//! [`super::CHECKPOINT_INTERVAL`] episodes and at the end. Given a config and
//! seed the metrics file is byte-identical across runs.

use super::metrics::{moving_average, EpisodeRecord, MetricsWriter};
use super::{
    EnvChoice, HarnessError, RunConfig, AVG_WINDOW, BASELINE_EPISODES, CHECKPOINT_INTERVAL,
    CONVERGENCE_MARGIN, STREAM_AGENT, STREAM_BASELINE, STREAM_ENV, STREAM_REPLAY,
};
use crate::agents::build_agent;
use crate::bridge::RemoteEnv;
use crate::env::EnvError;
use crate::replay::{ReplayBuffer, Transition};
use crate::seeding::derive_seed;
use crate::task::{scripted_baseline_return, Environment, ShapedEnv};
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub algorithm: crate::agents::Algorithm,
    pub seed: u64,
    /// Episodes actually run (early stop may cut the budget short).
    pub episodes_run: u32,
    /// First episode whose windowed average cleared the threshold.
    pub converged_at: Option<u32>,
    /// Mean return of the scripted straight-down policy.
    pub baseline_return: f64,
    pub threshold: f64,
    pub final_avg: f64,
    pub wall_time: Duration,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

pub fn train(config: &RunConfig) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let seed = config.seed;
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(
        config.out_dir.join("config.json"),
        serde_json::to_string_pretty(config)?,
    )?;

    let baseline = scripted_baseline_return(
        &config.scenario,
        BASELINE_EPISODES,
        derive_seed(seed, STREAM_BASELINE),
    )?;
    let threshold = baseline + CONVERGENCE_MARGIN;

    let env_seed = derive_seed(seed, STREAM_ENV);
    let mut env: Box<dyn Environment> = match &config.env {
        EnvChoice::Builtin => Box::new(ShapedEnv::new(config.scenario, env_seed)?),
        EnvChoice::Remote(addr) => {
            Box::new(RemoteEnv::connect(addr).map_err(|e| EnvError::Remote(e.to_string()))?)
        }
    };
    let mut agent = build_agent(
        config.algorithm,
        &config.agent,
        derive_seed(seed, STREAM_AGENT),
    )?;
    let mut replay = ReplayBuffer::new(config.replay.capacity, derive_seed(seed, STREAM_REPLAY));
    let learn_after = config.replay.warmup.max(config.agent.batch_size);

    let metrics_path = config.out_dir.join("metrics.csv");
    let checkpoint_path = config.out_dir.join("checkpoint.json");
    let mut writer = MetricsWriter::create(&metrics_path)?;

    let started = Instant::now();
    let mut returns: Vec<f64> = Vec::with_capacity(config.episodes as usize);
    let mut converged_at = None;
    let mut episodes_run = 0;

    for episode in 1..=config.episodes {
        // the first reset seeds the environment stream; later resets continue it
        let first = episode == 1;
        let state = env
            .reset(first.then_some(env_seed))
            .map_err(|source| abort(episode - 1, source))?;
        let mut obs = state.observation();
        let mut ep_return = 0.0;
        let mut steps = 0u32;
        let (termination, zone) = loop {
            let cmd = agent.act(&obs, true);
            let out = env.step(cmd).map_err(|source| abort(episode - 1, source))?;
            let next_obs = out.next_state.observation();
            replay.push(Transition {
                state: obs,
                action: [cmd.ax, cmd.ay],
                reward: out.reward,
                next_state: next_obs,
                done: out.done,
            });
            ep_return += out.reward;
            steps += 1;
            obs = next_obs;
            if replay.len() >= learn_after {
                let batch = replay.sample(config.agent.batch_size)?;
                agent.learn(&batch);
            }
            if out.done {
                break (out.termination, out.zone);
            }
        };

        returns.push(ep_return);
        let lo = returns.len().saturating_sub(AVG_WINDOW);
        let avg = returns[lo..].iter().sum::<f64>() / (returns.len() - lo) as f64;
        writer.write(&EpisodeRecord {
            episode,
            ret: ep_return,
            steps,
            termination,
            zone,
            wall_ms: (steps as f64 * config.scenario.dt * 1000.0).round() as u64,
            avg50: avg,
        })?;
        episodes_run = episode;

        if episode % CHECKPOINT_INTERVAL == 0 {
            crate::agents::save_checkpoint(
                agent.as_ref(),
                &config.scenario,
                &config
                    .out_dir
                    .join(format!("checkpoint_ep{episode:05}.json")),
            )?;
        }
        // convergence needs a full window; shorter prefixes are noise-dominated
        if converged_at.is_none() && returns.len() >= AVG_WINDOW && avg > threshold {
            converged_at = Some(episode);
            if config.stop_at_threshold {
                break;
            }
        }
    }

    crate::agents::save_checkpoint(agent.as_ref(), &config.scenario, &checkpoint_path)?;

    let final_avg = *moving_average(&returns, AVG_WINDOW)
        .last()
        .expect("at least one episode ran");
    Ok(RunSummary {
        algorithm: config.algorithm,
        seed,
        episodes_run,
        converged_at,
        baseline_return: baseline,
        threshold,
        final_avg,
        wall_time: started.elapsed(),
        metrics_path,
        checkpoint_path,
    })
}

fn abort(completed: u32, source: EnvError) -> HarnessError {
    HarnessError::Aborted { completed, source }
}
