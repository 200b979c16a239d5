//! Continuous-control reinforcement learning for autonomous quadrotor landing.
//!
//! The crate bundles everything needed to train and evaluate landing policies:
//!
//! - [`env`] — a deterministic, seedable landing simulator;
//! - [`reward`] — the shaping potential and its per-step temporal difference;
//! - [`nn`] — a small multi-layer perceptron with explicit backprop and Adam;
//! - [`replay`] — a fixed-capacity FIFO experience store;
//! - [`agents`] — DDPG, TD3 and SAC learners built on the shared substrate;
//! - [`bridge`] — a line-delimited JSON-over-TCP environment protocol;
//! - [`harness`] — seeded training/evaluation loops, metrics CSVs and plots.

pub mod agents;
pub mod bridge;
pub mod env;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod reward;
pub mod seeding;
pub mod task;

pub use agents::{build_agent, Agent, AgentConfig, Algorithm, LossReport};
pub use env::{
    ActionCmd, EnvError, LandingEnv, LandingZone, ScenarioConfig, StepOutcome, Termination,
    VehicleState,
};
pub use harness::{evaluate, plot_metrics, train, EvalSummary, RunConfig, RunSummary};
pub use replay::{ReplayBuffer, Transition};
pub use task::{Environment, ShapedEnv};
