//! Tanh-squashed Gaussian, one dimension at a time.
//!
//! A pre-squash sample `u = mean + std * noise` is pushed through `tanh` to
//! respect the action bounds; the log-density picks up the change-of-variables
//! correction `-ln(1 - a^2)`. A small epsilon keeps the correction finite at
//! saturation.

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const SQUASH_EPS: f64 = 1e-6;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy)]
pub struct TanhGaussianSample {
    /// Squashed action in (-1, 1).
    pub action: f64,
    pub pre_tanh: f64,
    /// Clamped log standard deviation actually used.
    pub log_std: f64,
    /// Log-density of `action` under the squashed distribution.
    pub log_prob: f64,
}

/// Draws the squashed sample for a standard-normal `noise` value; pass zero
/// noise for the distribution's deterministic center.
pub fn squash(mean: f64, raw_log_std: f64, noise: f64) -> TanhGaussianSample {
    let log_std = raw_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
    let std = log_std.exp();
    let pre_tanh = mean + std * noise;
    let action = pre_tanh.tanh();
    // N(u; mean, std) evaluated at u = mean + std * noise
    let gauss = -0.5 * LN_2PI - log_std - 0.5 * noise * noise;
    let log_prob = gauss - (1.0 - action * action + SQUASH_EPS).ln();
    TanhGaussianSample {
        action,
        pre_tanh,
        log_std,
        log_prob,
    }
}

/// Log-density of an arbitrary `action` in (-1, 1) under the squashed
/// distribution; the independent route through `atanh` used by tests.
pub fn log_density(action: f64, mean: f64, raw_log_std: f64) -> f64 {
    let log_std = raw_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
    let std = log_std.exp();
    let u = action.atanh();
    let z = (u - mean) / std;
    let gauss = -0.5 * LN_2PI - log_std - 0.5 * z * z;
    gauss - (1.0 - action * action + SQUASH_EPS).ln()
}
