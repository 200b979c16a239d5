//! The landing task as an agent sees it: the simulator composed with the
//! shaping reward behind one episode protocol.
//!
//! [`ShapedEnv`] is the in-process implementation; the bridge client offers
//! the same trait over TCP, so training loops cannot tell them apart.

use crate::env::{ActionCmd, EnvError, LandingEnv, ScenarioConfig, StepOutcome, VehicleState};
use crate::reward::{landed_bonus, shaping_potential, step_reward, ShapingInput};

/// Episode protocol shared by the built-in task and remote environments.
pub trait Environment {
    /// Starts a new episode, optionally reseeding the environment's random
    /// stream, and returns the initial state.
    fn reset(&mut self, seed: Option<u64>) -> Result<VehicleState, EnvError>;

    /// Applies one command; the outcome carries the shaped reward.
    fn step(&mut self, cmd: ActionCmd) -> Result<StepOutcome, EnvError>;

    /// Per-axis command bound, m/s.
    fn action_bound(&self) -> f64;
}

/// Landing simulator with the shaped reward: each step pays the temporal
/// difference of the shaping potential, evaluated on the post-step state, the
/// applied command, and the touchdown bonus.
#[derive(Debug, Clone)]
pub struct ShapedEnv {
    env: LandingEnv,
    prev_shaping: f64,
    initial_shaping: f64,
}

impl ShapedEnv {
    pub fn new(cfg: ScenarioConfig, seed: u64) -> Result<Self, EnvError> {
        Ok(Self {
            env: LandingEnv::new(cfg, seed)?,
            prev_shaping: 0.0,
            initial_shaping: 0.0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.env.config()
    }

    pub fn steps(&self) -> u32 {
        self.env.steps()
    }

    /// Shaping of the most recent post-step snapshot (or of the reset state).
    pub fn last_shaping(&self) -> f64 {
        self.prev_shaping
    }

    /// Shaping of the current episode's reset state, with zero command and no
    /// bonus.
    pub fn initial_shaping(&self) -> f64 {
        self.initial_shaping
    }
}

impl Environment for ShapedEnv {
    fn reset(&mut self, seed: Option<u64>) -> Result<VehicleState, EnvError> {
        let state = self.env.reset(seed);
        // reference point for the first temporal difference: rest command, no bonus
        let sh = shaping_potential(&ShapingInput::new(&state, &ActionCmd::new(0.0, 0.0), 0.0))
            .map_err(|_| EnvError::NonFinite("shaping input"))?;
        self.prev_shaping = sh;
        self.initial_shaping = sh;
        Ok(state)
    }

    fn step(&mut self, cmd: ActionCmd) -> Result<StepOutcome, EnvError> {
        if !cmd.is_finite() {
            return Err(EnvError::NonFinite("action command"));
        }
        // shaping must see the command the simulator actually applies
        let cmd = cmd.clamped(self.env.config().a_max);
        let mut out = self.env.step(cmd)?;
        let shaping = shaping_potential(&ShapingInput::new(
            &out.next_state,
            &cmd,
            landed_bonus(out.zone),
        ))
        .map_err(|_| EnvError::NonFinite("shaping input"))?;
        out.reward = step_reward(shaping, self.prev_shaping);
        self.prev_shaping = shaping;
        Ok(out)
    }

    fn action_bound(&self) -> f64 {
        self.env.config().a_max
    }
}

/// Mean return of the scripted straight-down policy (zero commands) over a
/// number of episodes. Used as the convergence reference for training runs.
pub fn scripted_baseline_return(
    cfg: &ScenarioConfig,
    episodes: u32,
    seed: u64,
) -> Result<f64, EnvError> {
    assert!(episodes > 0);
    let mut env = ShapedEnv::new(*cfg, seed)?;
    let mut total = 0.0;
    for _ in 0..episodes {
        env.reset(None)?;
        loop {
            let out = env.step(ActionCmd::new(0.0, 0.0))?;
            total += out.reward;
            if out.done {
                break;
            }
        }
    }
    Ok(total / episodes as f64)
}
