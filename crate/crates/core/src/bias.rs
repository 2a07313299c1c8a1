//! Unified gyro/accelerometer bias observer.
//!
//! Both estimators are driven by the same signal, the leveling control rate
//! resolved in body axes. The gyro estimator integrates it with time constant
//! `τ_g`; the accelerometer estimator integrates it with a gain proportional
//! to the vehicle yaw rate, which is what makes accelerometer biases
//! observable in turns only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{skew, Mat3, Vec3};

/// Below this yaw rate the steady-state accelerometer solution is singular, rad/s.
pub const STEADY_STATE_MIN_TURN_RATE: f64 = 0.02;

/// Which body axes an estimator is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxesMask {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl AxesMask {
    pub const HORIZONTAL: AxesMask = AxesMask {
        x: true,
        y: true,
        z: false,
    };
    pub const ALL: AxesMask = AxesMask {
        x: true,
        y: true,
        z: true,
    };
    pub const NONE: AxesMask = AxesMask {
        x: false,
        y: false,
        z: false,
    };

    pub fn as_array(&self) -> [bool; 3] {
        [self.x, self.y, self.z]
    }

    /// `base + delta` on enabled axes; disabled axes keep `base` bit-for-bit.
    fn add_masked(&self, base: &Vec3, delta: &Vec3) -> Vec3 {
        let mut out = *base;
        for (i, on) in self.as_array().into_iter().enumerate() {
            if on {
                out[i] += delta[i];
            }
        }
        out
    }
}

impl Default for AxesMask {
    fn default() -> Self {
        AxesMask::HORIZONTAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasParams {
    /// Gyro bias observer time constant, s.
    pub tau_g: f64,
    /// Accelerometer bias observer rate constant, rad/s.
    pub omega_a: f64,
    /// Gravity magnitude, m/s².
    pub g: f64,
    pub gyro_axes: AxesMask,
    pub accel_axes: AxesMask,
}

impl Default for BiasParams {
    fn default() -> Self {
        Self {
            tau_g: 40.0,
            omega_a: 45f64.to_radians(),
            g: crate::DEFAULT_GRAVITY,
            gyro_axes: AxesMask::HORIZONTAL,
            accel_axes: AxesMask::HORIZONTAL,
        }
    }
}

impl BiasParams {
    /// Takes the accelerometer rate constant in deg/s, as it is usually quoted.
    pub fn with_degrees(tau_g: f64, omega_a_dps: f64) -> Self {
        Self {
            tau_g,
            omega_a: omega_a_dps.to_radians(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_g > 0.0) || self.tau_g.is_nan() {
            return Err(Error::param("tau_g", format!("must be > 0, got {}", self.tau_g)));
        }
        if !(self.omega_a > 0.0) || self.omega_a.is_nan() {
            return Err(Error::param("omega_a", format!("must be > 0, got {}", self.omega_a)));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::param("g", format!("must be > 0, got {}", self.g)));
        }
        Ok(())
    }
}

/// Current bias estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasState {
    /// Gyro bias estimate, rad/s.
    pub b_g_hat: Vec3,
    /// Accelerometer bias estimate, m/s².
    pub b_a_hat: Vec3,
}

impl BiasState {
    pub fn new(b_g_hat: Vec3, b_a_hat: Vec3) -> Self {
        Self { b_g_hat, b_a_hat }
    }
}

/// Forward Euler step of `ḃ_g = ω_p^b / τ_g`.
pub fn gyro_bias_step(state: &BiasState, omega_p_b: &Vec3, dt: f64, params: &BiasParams) -> BiasState {
    BiasState {
        b_g_hat: params
            .gyro_axes
            .add_masked(&state.b_g_hat, &(omega_p_b * (dt / params.tau_g))),
        ..*state
    }
}

/// Forward Euler step of `ḃ_a = g·ω_zb·ω_p^b / ω_a`.
pub fn accel_bias_step(
    state: &BiasState,
    omega_p_b: &Vec3,
    omega_zb: f64,
    dt: f64,
    params: &BiasParams,
) -> BiasState {
    if omega_zb == 0.0 {
        return *state;
    }
    let gain = params.g * omega_zb / params.omega_a * dt;
    BiasState {
        b_a_hat: params.accel_axes.add_masked(&state.b_a_hat, &(omega_p_b * gain)),
        ..*state
    }
}

/// Gyro bias from the settled control rate in straight motion.
pub fn steady_state_gyro(omega_p_b_avg: &Vec3) -> Vec3 {
    *omega_p_b_avg
}

/// Accelerometer bias from the settled control rate in a constant-rate turn
/// (gyro bias already compensated).
pub fn steady_state_accel(omega_p_b: &Vec3, omega_zb: f64, tau: f64, g: f64) -> Result<Vec3> {
    if !(omega_zb.abs() > STEADY_STATE_MIN_TURN_RATE) {
        return Err(Error::SingularTurnRate {
            omega_zb,
            omega_min: STEADY_STATE_MIN_TURN_RATE,
        });
    }
    let inv = 1.0 / omega_zb;
    let m = Mat3::new(inv, -tau, 0.0, tau, inv, 0.0, 0.0, 0.0, 0.0);
    Ok(m * omega_p_b * g)
}

/// Candidate Lyapunov function of the closed loop, in terms of residual biases
/// (`b − b̂`).
pub fn lyapunov_value(
    omega_p_b: &Vec3,
    b_g_resid: &Vec3,
    b_a_resid: &Vec3,
    tau: f64,
    tau_g: f64,
    omega_a: f64,
    g: f64,
) -> f64 {
    0.5 * tau * omega_p_b.norm_squared()
        + 0.5 * tau_g * b_g_resid.norm_squared()
        + omega_a / (2.0 * g * g) * b_a_resid.norm_squared()
}

/// Time derivative of [`lyapunov_value`] along the linearized dynamics,
/// `−ω_p^bᵀ·(τ·skew(ω_b) + I)·ω_p^b`. The skew part contributes nothing, so
/// this equals `−|ω_p^b|²`.
pub fn lyapunov_rate(omega_p_b: &Vec3, omega_b: &Vec3, tau: f64) -> f64 {
    let m = skew(omega_b) * tau + Mat3::identity();
    -omega_p_b.dot(&(m * omega_p_b))
}
