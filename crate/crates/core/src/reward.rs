//! Shaping potential and per-step reward.
//!
//! A state/action snapshot is scored by a single potential; the per-step
//! reward is the temporal difference of that potential, so episode returns
//! telescope to `shaping(final) - shaping(initial)` and every step carries a
//! progress signal.

use crate::env::{ActionCmd, LandingZone, VehicleState};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("non-finite shaping input")]
    NonFinite,
}

/// Snapshot scored by the shaping potential: relative position, relative
/// velocity, the applied command, and the landed bonus weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingInput {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub ax: f64,
    pub ay: f64,
    /// Landed indicator weight; zero unless the step touched down on the pad.
    pub landed_bonus: f64,
}

impl ShapingInput {
    pub fn new(state: &VehicleState, cmd: &ActionCmd, landed_bonus: f64) -> Self {
        Self {
            px: state.px,
            py: state.py,
            pz: state.pz,
            vx: state.vx,
            vy: state.vy,
            vz: state.vz,
            ax: cmd.ax,
            ay: cmd.ay,
            landed_bonus,
        }
    }

    fn is_finite(&self) -> bool {
        [
            self.px,
            self.py,
            self.pz,
            self.vx,
            self.vy,
            self.vz,
            self.ax,
            self.ay,
            self.landed_bonus,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Scores a snapshot:
/// `-100*|p| - 10*|v| - |(ax, ay)| + 10*C*(1 - |ax|) + 10*C*(1 - |ay|)`,
/// with Euclidean norms. Position dominates, velocity and throttle smoothness
/// follow, and the touchdown bonus rewards cutting throttle on the pad.
pub fn shaping_potential(input: &ShapingInput) -> Result<f64, RewardError> {
    if !input.is_finite() {
        return Err(RewardError::NonFinite);
    }
    let p_norm = (input.px * input.px + input.py * input.py + input.pz * input.pz).sqrt();
    let v_norm = (input.vx * input.vx + input.vy * input.vy + input.vz * input.vz).sqrt();
    let a_norm = (input.ax * input.ax + input.ay * input.ay).sqrt();
    let c = input.landed_bonus;
    Ok(-100.0 * p_norm - 10.0 * v_norm - a_norm
        + 10.0 * c * (1.0 - input.ax.abs())
        + 10.0 * c * (1.0 - input.ay.abs()))
}

/// Per-step reward: the temporal difference of the shaping potential.
pub fn step_reward(shaping_current: f64, shaping_previous: f64) -> f64 {
    shaping_current - shaping_previous
}

/// Bonus weight for the terminal zone: red center beats the green surround,
/// anything else earns nothing.
pub fn landed_bonus(zone: Option<LandingZone>) -> f64 {
    match zone {
        Some(LandingZone::Red) => 2.0,
        Some(LandingZone::Green) => 1.0,
        Some(LandingZone::Off) | None => 0.0,
    }
}
