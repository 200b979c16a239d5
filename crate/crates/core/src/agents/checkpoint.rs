//! Agent checkpoints: a JSON manifest naming the algorithm and its
//! configuration, with every network's parameters embedded as base64 blobs of
//! the flat parameter format.

use super::{build_agent, Agent, AgentConfig, AgentError, Algorithm};
use crate::env::ScenarioConfig;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

const FORMAT_NAME: &str = "landrl-checkpoint";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad checkpoint: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    algorithm: Algorithm,
    agent: AgentConfig,
    scenario: ScenarioConfig,
    nets: BTreeMap<String, String>,
}

pub fn save_checkpoint(
    agent: &dyn Agent,
    scenario: &ScenarioConfig,
    path: &Path,
) -> Result<(), CheckpointError> {
    let nets = agent
        .net_blobs()
        .into_iter()
        .map(|(name, bytes)| (name, BASE64.encode(bytes)))
        .collect();
    let file = CheckpointFile {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        algorithm: agent.algorithm(),
        agent: agent.config().clone(),
        scenario: *scenario,
        nets,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Rebuilds the agent named by the manifest and restores every network.
/// `seed` re-seeds the agent's exploration stream; greedy evaluation does not
/// consume it.
pub fn load_checkpoint(
    path: &Path,
    seed: u64,
) -> Result<(Box<dyn Agent>, ScenarioConfig), CheckpointError> {
    let text = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    if file.format != FORMAT_NAME {
        return Err(CheckpointError::BadFormat(format!(
            "format '{}' is not '{FORMAT_NAME}'",
            file.format
        )));
    }
    if file.version != FORMAT_VERSION {
        return Err(CheckpointError::BadFormat(format!(
            "unsupported version {}",
            file.version
        )));
    }
    let mut blobs = BTreeMap::new();
    for (name, encoded) in &file.nets {
        let bytes = BASE64
            .decode(encoded)
            .map_err(|e| CheckpointError::BadFormat(format!("net '{name}': {e}")))?;
        blobs.insert(name.clone(), bytes);
    }
    let mut agent = build_agent(file.algorithm, &file.agent, seed)?;
    agent.load_net_blobs(&blobs)?;
    Ok((agent, file.scenario))
}
