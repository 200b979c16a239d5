//! Deterministic quadrotor landing environment.
//!
//! The drone starts a couple of meters above a square landing pad and sinks at
//! a height-proportional rate while the agent commands horizontal velocity.
//! Horizontal velocity tracks the command through a first-order lag, standing
//! in for the flight controller's response. All randomness flows through a
//! seeded RNG owned by the environment, so a seed plus an action sequence
//! reproduces a trajectory bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already finished; call reset first")]
    EpisodeOver,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("remote environment: {0}")]
    Remote(String),
}

/// Position and velocity of the drone relative to the pad's top-center.
///
/// `pz` is height above the pad's upper surface; the landmark is static, so
/// relative and absolute velocities coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl VehicleState {
    /// Packs the state into the fixed observation order
    /// `(px, py, pz, vx, vy, vz)`, unnormalized.
    pub fn observation(&self) -> [f64; 6] {
        [self.px, self.py, self.pz, self.vx, self.vy, self.vz]
    }

    pub fn from_observation(obs: [f64; 6]) -> Self {
        Self {
            px: obs[0],
            py: obs[1],
            pz: obs[2],
            vx: obs[3],
            vy: obs[4],
            vz: obs[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.observation().iter().all(|v| v.is_finite())
    }

    /// Speed magnitude, m/s.
    pub fn speed(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy + self.vz * self.vz).sqrt()
    }
}

/// Horizontal velocity command, meters per second per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCmd {
    pub ax: f64,
    pub ay: f64,
}

impl ActionCmd {
    pub fn new(ax: f64, ay: f64) -> Self {
        Self { ax, ay }
    }

    /// Clamps both axes to `[-bound, bound]`.
    pub fn clamped(self, bound: f64) -> Self {
        Self {
            ax: self.ax.clamp(-bound, bound),
            ay: self.ay.clamp(-bound, bound),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ax.is_finite() && self.ay.is_finite()
    }
}

/// Scenario geometry and dynamics parameters.
///
/// The pad is square: `pad_half_red` and `pad_half_green` are half-widths of
/// the red center and the surrounding green area. Heights are measured above
/// the pad's upper surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Control interval, seconds (10 Hz interaction rate).
    pub dt: f64,
    /// Episode cap, steps.
    pub max_steps: u32,
    pub pad_half_green: f64,
    pub pad_half_red: f64,
    /// Descent starts this far above the pad surface.
    pub start_height: f64,
    /// Start position is uniform in a square of this half-width around the pad center.
    pub start_box_half: f64,
    /// Descent-law gain: sink rate is `alpha_descent * pz` before clamping, 1/s.
    pub alpha_descent: f64,
    pub v_desc_min: f64,
    pub v_desc_max: f64,
    /// Heights at or below this count as touched down, meters.
    pub landed_threshold: f64,
    /// Horizontal abort radius (max-norm), meters.
    pub abort_radius: f64,
    /// First-order lag constant of the velocity tracking, seconds.
    pub vel_time_constant: f64,
    /// Per-axis command bound, m/s.
    pub a_max: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            max_steps: 40,
            pad_half_green: 2.0,
            pad_half_red: 0.25,
            start_height: 2.0,
            start_box_half: 1.0,
            alpha_descent: 0.8,
            v_desc_min: 0.2,
            v_desc_max: 1.5,
            landed_threshold: 0.05,
            abort_radius: 5.0,
            vel_time_constant: 0.3,
            a_max: 1.0,
        }
    }
}

impl ScenarioConfig {
    // negated comparisons stay: `!(x > 0.0)` also rejects NaN, `x <= 0.0` would not
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |msg: &str| Err(EnvError::InvalidScenario(msg.to_string()));
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if self.max_steps < 1 {
            return fail("max_steps must be at least 1");
        }
        if !(0.0 < self.pad_half_red && self.pad_half_red < self.pad_half_green) {
            return fail("require 0 < pad_half_red < pad_half_green");
        }
        if !(0.0 < self.landed_threshold && self.landed_threshold < self.start_height) {
            return fail("require 0 < landed_threshold < start_height");
        }
        if !(self.v_desc_min <= self.v_desc_max) {
            return fail("require v_desc_min <= v_desc_max");
        }
        if !(self.vel_time_constant > 0.0) {
            return fail("vel_time_constant must be positive");
        }
        if !(self.start_box_half >= 0.0) {
            return fail("start_box_half must be non-negative");
        }
        if !(self.a_max > 0.0) {
            return fail("a_max must be positive");
        }
        Ok(())
    }

    /// Downward speed at height `pz`: `alpha_descent * pz` clamped to the
    /// configured band, so the drone sinks slower near the ground but always
    /// makes progress.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // `!(pz >= 0.0)` also rejects NaN
    pub fn descent_rate(&self, pz: f64) -> Result<f64, EnvError> {
        if !(pz >= 0.0) {
            return Err(EnvError::Domain(format!(
                "descent_rate requires pz >= 0, got {pz}"
            )));
        }
        Ok((self.alpha_descent * pz).clamp(self.v_desc_min, self.v_desc_max))
    }

    /// Landing zone for a terminal horizontal offset. Pure in `(px, py)`;
    /// the pads are square so the max-norm decides.
    pub fn classify_zone(&self, px: f64, py: f64) -> LandingZone {
        let m = px.abs().max(py.abs());
        if m <= self.pad_half_red {
            LandingZone::Red
        } else if m <= self.pad_half_green {
            LandingZone::Green
        } else {
            LandingZone::Off
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    Landed,
    TimeOut,
    OutOfRange,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::Running => "running",
            Termination::Landed => "landed",
            Termination::TimeOut => "time_out",
            Termination::OutOfRange => "out_of_range",
        };
        f.write_str(s)
    }
}

/// Where the drone touched down. Absent unless the episode ended `Landed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingZone {
    Red,
    Green,
    Off,
}

impl std::fmt::Display for LandingZone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LandingZone::Red => "red",
            LandingZone::Green => "green",
            LandingZone::Off => "off",
        };
        f.write_str(s)
    }
}

/// Result of one environment step.
///
/// The bare simulator leaves `reward` at zero; the shaped task wrapper fills
/// it in (see [`crate::task::ShapedEnv`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: VehicleState,
    pub reward: f64,
    pub done: bool,
    pub termination: Termination,
    pub zone: Option<LandingZone>,
}

/// The landing simulator. One instance per episode stream; create several
/// instances for parallel rollouts, they share nothing.
#[derive(Debug, Clone)]
pub struct LandingEnv {
    cfg: ScenarioConfig,
    state: VehicleState,
    steps: u32,
    done: bool,
    rng: ChaCha8Rng,
}

impl LandingEnv {
    /// A fresh environment starts finished: step before the first reset is a
    /// lifecycle error.
    pub fn new(cfg: ScenarioConfig, seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: VehicleState {
                px: 0.0,
                py: 0.0,
                pz: cfg.start_height,
                vx: 0.0,
                vy: 0.0,
                vz: 0.0,
            },
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts a new episode: horizontal position uniform in the start box,
    /// height at `start_height`, velocities zero. Passing a seed reseeds the
    /// environment's random stream first.
    pub fn reset(&mut self, seed: Option<u64>) -> VehicleState {
        if let Some(s) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(s);
        }
        let b = self.cfg.start_box_half;
        // b * (2u - 1) keeps the draw count fixed even for a degenerate box.
        let ux: f64 = self.rng.gen();
        let uy: f64 = self.rng.gen();
        self.state = VehicleState {
            px: b * (2.0 * ux - 1.0),
            py: b * (2.0 * uy - 1.0),
            pz: self.cfg.start_height,
            vx: 0.0,
            vy: 0.0,
            vz: 0.0,
        };
        self.steps = 0;
        self.done = false;
        self.state
    }

    /// Advances one control interval.
    ///
    /// Horizontal velocity tracks the clamped command through a first-order
    /// lag, the sink rate follows the descent law at the pre-step height, and
    /// positions integrate semi-implicitly. Termination is evaluated in order:
    /// landed, out of range, time out.
    pub fn step(&mut self, cmd: ActionCmd) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        if !cmd.is_finite() {
            return Err(EnvError::NonFinite("action command"));
        }
        let cfg = &self.cfg;
        let cmd = cmd.clamped(cfg.a_max);
        let k = cfg.dt / cfg.vel_time_constant;

        let vx = self.state.vx + (cmd.ax - self.state.vx) * k;
        let vy = self.state.vy + (cmd.ay - self.state.vy) * k;
        let vz = -cfg.descent_rate(self.state.pz)?;

        let px = self.state.px + vx * cfg.dt;
        let py = self.state.py + vy * cfg.dt;
        let pz = self.state.pz + vz * cfg.dt;

        self.steps += 1;
        let termination = if pz <= cfg.landed_threshold {
            Termination::Landed
        } else if px.abs().max(py.abs()) > cfg.abort_radius {
            Termination::OutOfRange
        } else if self.steps == cfg.max_steps {
            Termination::TimeOut
        } else {
            Termination::Running
        };
        let zone = (termination == Termination::Landed).then(|| cfg.classify_zone(px, py));

        self.state = VehicleState {
            px,
            py,
            pz,
            vx,
            vy,
            vz,
        };
        self.done = termination != Termination::Running;

        Ok(StepOutcome {
            next_state: self.state,
            reward: 0.0,
            done: self.done,
            termination,
            zone,
        })
    }
}
