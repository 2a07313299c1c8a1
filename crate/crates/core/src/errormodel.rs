//! Linearized error dynamics of the platform and the bias observer.
//!
//! Nothing here is used by the estimator itself; these functions are an
//! analytical model against which the nonlinear implementation is checked.
//! Tilt and control-rate errors are expressed in body axes, and the body
//! rate is assumed to be a pure yaw rate `ω_b = (0, 0, ω_zb)` where noted.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::bias::{lyapunov_value, BiasParams};
use crate::error::{Error, Result};
use crate::math::{skew, Dcm, Mat3, Vec3};

/// Largest tilt accepted by [`LinErrorState::new`], rad.
pub const SMALL_ANGLE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    /// Attitude correction time constant, s.
    pub tau: f64,
    /// Gyro bias observer time constant, s.
    pub tau_g: f64,
    /// Accelerometer bias observer rate constant, rad/s.
    pub omega_a: f64,
    /// Gravity, m/s².
    pub g: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        let b = BiasParams::default();
        Self {
            tau: 4.0,
            tau_g: b.tau_g,
            omega_a: b.omega_a,
            g: b.g,
        }
    }
}

impl LinearParams {
    /// Leveling gain `k = 1/(τ·g)`.
    pub fn k(&self) -> f64 {
        1.0 / (self.tau * self.g)
    }

    pub fn k_vec(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.k())
    }
}

/// Error state of the linearized closed loop. Biases are residuals `b − b̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinErrorState {
    /// Platform tilt error in body axes, rad.
    pub theta_b: Vec3,
    /// Leveling control rate in body axes, rad/s.
    pub omega_p_b: Vec3,
    /// Residual gyro bias, rad/s.
    pub b_g: Vec3,
    /// Residual accelerometer bias, m/s².
    pub b_a: Vec3,
}

impl LinErrorState {
    pub fn new(theta_b: Vec3, omega_p_b: Vec3, b_g: Vec3, b_a: Vec3) -> Result<Self> {
        if theta_b.norm() >= SMALL_ANGLE_LIMIT {
            return Err(Error::param(
                "theta_b",
                format!("|θ| = {} rad is outside the small-angle regime", theta_b.norm()),
            ));
        }
        Ok(Self {
            theta_b,
            omega_p_b,
            b_g,
            b_a,
        })
    }

    /// State whose control rate is the one produced by `theta_b` and `b_a`.
    pub fn consistent(theta_b: Vec3, b_g: Vec3, b_a: Vec3, params: &LinearParams) -> Result<Self> {
        let w = control_from_error(&theta_b, &b_a, &params.k_vec(), params.g);
        Self::new(theta_b, w, b_g, b_a)
    }

    pub fn zero() -> Self {
        Self {
            theta_b: Vec3::zeros(),
            omega_p_b: Vec3::zeros(),
            b_g: Vec3::zeros(),
            b_a: Vec3::zeros(),
        }
    }

    fn to_vector(self) -> SVector<f64, 9> {
        let mut x = SVector::<f64, 9>::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.omega_p_b);
        x.fixed_rows_mut::<3>(3).copy_from(&self.b_g);
        x.fixed_rows_mut::<3>(6).copy_from(&self.b_a);
        x
    }

    /// Concatenated `(ω_p^b, b_g, b_a)` Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn lyapunov(&self, params: &LinearParams) -> f64 {
        lyapunov_value(
            &self.omega_p_b,
            &self.b_g,
            &self.b_a,
            params.tau,
            params.tau_g,
            params.omega_a,
            params.g,
        )
    }
}

/// Tilt-error rate in body axes: `θ̇_b = −skew(ω_b)·θ_b + b_g − ω_p^b`.
pub fn tilt_rate(theta_b: &Vec3, omega_b: &Vec3, b_g: &Vec3, omega_p_b: &Vec3) -> Vec3 {
    -(skew(omega_b) * theta_b) + b_g - omega_p_b
}

/// Control rate produced by a platform tilt `theta_p` and an accelerometer
/// bias, before any small-angle simplification.
pub fn control_from_error_full(k_vec: &Vec3, theta_p: &Vec3, f_p: &Vec3, b_a: &Vec3, c: &Dcm) -> Vec3 {
    theta_p * k_vec.dot(f_p) - f_p * k_vec.dot(theta_p) + skew(k_vec) * (c * b_a)
}

/// Simplified body-frame control rate: `kg·θ_b + skew(k)·b_a`.
pub fn control_from_error(theta_b: &Vec3, b_a: &Vec3, k_vec: &Vec3, g: f64) -> Vec3 {
    theta_b * (k_vec.norm() * g) + skew(k_vec) * b_a
}

/// `−(τ·skew(ω_b) + I)`.
pub fn dynamics_matrix(tau: f64, omega_b: &Vec3) -> Mat3 {
    -(skew(omega_b) * tau + Mat3::identity())
}

/// Time derivative of the body-frame control rate:
/// `τ·ω̇ = −(τ·skew(ω_b) + I)·ω + b_g + ω_zb·b_a/g`.
pub fn control_rate_derivative(
    omega_p_b: &Vec3,
    omega_b: &Vec3,
    b_g: &Vec3,
    b_a: &Vec3,
    omega_zb: f64,
    tau: f64,
    g: f64,
) -> Vec3 {
    (dynamics_matrix(tau, omega_b) * omega_p_b + b_g + b_a * (omega_zb / g)) / tau
}

/// One Euler step of [`control_rate_derivative`].
#[allow(clippy::too_many_arguments)]
pub fn control_rate_dynamics_step(
    omega_p_b: &Vec3,
    omega_b: &Vec3,
    b_g: &Vec3,
    b_a: &Vec3,
    omega_zb: f64,
    tau: f64,
    g: f64,
    dt: f64,
) -> Result<Vec3> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(omega_p_b + control_rate_derivative(omega_p_b, omega_b, b_g, b_a, omega_zb, tau, g) * dt)
}

/// Stationary control rate for constant biases and yaw rate: solves
/// `(τ·skew(ω_b) + I)·ω = b_g + ω_zb·b_a/g`.
pub fn stationary_control_rate(b_g: &Vec3, b_a: &Vec3, omega_zb: f64, tau: f64, g: f64) -> Result<Vec3> {
    let m = -dynamics_matrix(tau, &Vec3::new(0.0, 0.0, omega_zb));
    let rhs = b_g + b_a * (omega_zb / g);
    m.lu().solve(&rhs).ok_or(Error::DegenerateMatrix)
}

/// Closed-form eigenvalues of [`dynamics_matrix`] for a pure yaw rate.
pub fn dynamics_eigenvalues(tau: f64, omega_zb: f64) -> [Complex64; 3] {
    [
        Complex64::new(-1.0, 0.0),
        Complex64::new(-1.0, tau * omega_zb),
        Complex64::new(-1.0, -tau * omega_zb),
    ]
}

/// Sample of a linear closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinSample {
    pub t: f64,
    pub omega_zb: f64,
    pub state: LinErrorState,
}

/// Generator matrix of the 9-state closed loop `(ω_p^b, b_g, b_a)` with
/// residual-bias feedback, for yaw rate `omega_zb`.
fn closed_loop_generator(omega_zb: f64, params: &LinearParams) -> SMatrix<f64, 9, 9> {
    let LinearParams { tau, tau_g, omega_a, g } = *params;
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    let w = dynamics_matrix(tau, &Vec3::new(0.0, 0.0, omega_zb)) / tau;
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Mat3::identity() / tau));
    a.fixed_view_mut::<3, 3>(0, 6).copy_from(&(Mat3::identity() * (omega_zb / (g * tau))));
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-Mat3::identity() / tau_g));
    a.fixed_view_mut::<3, 3>(6, 0).copy_from(&(-Mat3::identity() * (g * omega_zb / omega_a)));
    a
}

/// Integrates the linearized closed loop (control-rate dynamics plus both bias
/// observers acting on the residuals) over `[0, duration]`.
///
/// Uses the implicit midpoint rule, under which the Lyapunov function decays
/// by exactly `dt·|ω_mid|²` per step, so monotonicity is not an artifact of
/// step size. `omega_zb` is sampled at step midpoints.
pub fn closed_loop_linear_sim<F>(
    initial: &LinErrorState,
    omega_zb: F,
    params: &LinearParams,
    dt: f64,
    duration: f64,
) -> Result<Vec<LinSample>>
where
    F: Fn(f64) -> f64,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", format!("must be > 0, got {duration}")));
    }
    let steps = (duration / dt).round() as usize;
    let eye = SMatrix::<f64, 9, 9>::identity();
    let k_vec = params.k_vec();
    let kg = params.k() * params.g;

    let mut x = initial.to_vector();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(LinSample {
        t: 0.0,
        omega_zb: omega_zb(0.0),
        state: *initial,
    });
    // cache the step matrix while the yaw rate is unchanged
    let mut cached: Option<(f64, SMatrix<f64, 9, 9>)> = None;
    for i in 0..steps {
        let t_mid = (i as f64 + 0.5) * dt;
        let wz = omega_zb(t_mid);
        let step = match cached {
            Some((w, m)) if w == wz => m,
            _ => {
                let a = closed_loop_generator(wz, params) * (0.5 * dt);
                let m = (eye - a).lu().solve(&(eye + a)).ok_or(Error::DegenerateMatrix)?;
                cached = Some((wz, m));
                m
            }
        };
        x = step * x;
        let omega_p_b = Vec3::new(x[0], x[1], x[2]);
        let b_a = Vec3::new(x[6], x[7], x[8]);
        let t = (i + 1) as f64 * dt;
        out.push(LinSample {
            t,
            omega_zb: omega_zb(t),
            state: LinErrorState {
                theta_b: (omega_p_b - skew(&k_vec) * b_a) / kg,
                omega_p_b,
                b_g: Vec3::new(x[3], x[4], x[5]),
                b_a,
            },
        });
    }
    Ok(out)
}
