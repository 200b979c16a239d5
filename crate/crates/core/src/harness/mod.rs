//! Training and evaluation harness: seeded runs, per-episode metrics CSVs,
//! checkpoints, and reward-curve plots.

use crate::agents::{AgentConfig, AgentError, Algorithm, CheckpointError};
use crate::env::{EnvError, ScenarioConfig};
use crate::replay::ReplayError;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

mod eval;
mod metrics;
mod plot;
mod train;

pub use eval::{evaluate, EvalSummary};
pub use metrics::{moving_average, read_metrics, EpisodeRecord, MetricsWriter, METRICS_HEADER};
pub use plot::plot_metrics;
pub use train::{train, RunSummary};

/// Moving-average window for the convergence criterion and the plotted curve.
pub const AVG_WINDOW: usize = 50;
/// A run counts as converged once the windowed average return exceeds the
/// scripted straight-down policy's mean return by this margin.
pub const CONVERGENCE_MARGIN: f64 = 10.0;
/// Episodes used to measure the scripted baseline.
pub const BASELINE_EPISODES: u32 = 100;
/// A checkpoint is written every this many episodes, plus one at the end.
pub const CHECKPOINT_INTERVAL: u32 = 100;

// random stream tags for one run
pub(crate) const STREAM_ENV: u64 = 0x01;
pub(crate) const STREAM_AGENT: u64 = 0x02;
pub(crate) const STREAM_REPLAY: u64 = 0x03;
pub(crate) const STREAM_BASELINE: u64 = 0x04;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("metrics file: {0}")]
    Metrics(String),
    #[error("plot: {0}")]
    Plot(String),
    #[error("training aborted after episode {completed}: {source}")]
    Aborted {
        completed: u32,
        #[source]
        source: EnvError,
    },
}

/// Where the episodes come from: the built-in simulator or a bridge server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvChoice {
    Builtin,
    Remote(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplaySettings {
    pub capacity: usize,
    /// Learning starts once this many transitions are stored.
    pub warmup: usize,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            warmup: 1_000,
        }
    }
}

/// Everything one training run needs; the JSON config file mirrors these
/// field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub episodes: u32,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub agent: AgentConfig,
    pub replay: ReplaySettings,
    pub env: EnvChoice,
    pub out_dir: PathBuf,
    /// Stop as soon as the convergence threshold is crossed.
    pub stop_at_threshold: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sac,
            episodes: 1000,
            seed: 0,
            scenario: ScenarioConfig::default(),
            agent: AgentConfig::default(),
            replay: ReplaySettings::default(),
            env: EnvChoice::Builtin,
            out_dir: PathBuf::from("out"),
            stop_at_threshold: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes < 1 {
            return Err(HarnessError::InvalidConfig(
                "episodes must be at least 1".into(),
            ));
        }
        if self.replay.capacity == 0 {
            return Err(HarnessError::InvalidConfig(
                "replay capacity must be positive".into(),
            ));
        }
        self.scenario.validate()?;
        self.agent.validate()?;
        Ok(())
    }
}
