//! The "virtual platform" attitude loop.
//!
//! Bias-corrected gyro rates drive the DCM; the platform is levelled by a
//! control rate proportional to the horizontal mismatch between the
//! accelerometer specific force projected on the platform and the specific
//! force obtained by differentiating GNSS velocity. Heading is slaved to the
//! GNSS course over ground.

use crate::bias::BiasState;
use crate::error::{Error, Result};
use crate::math::{dcm_step, skew, wrap_angle, Dcm, Vec3};

/// How the platform heading follows the GNSS course.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadingMode {
    /// Proportional feedback on the yaw-minus-course error.
    #[default]
    Slaved,
    /// Overwrite yaw with the course whenever it is valid.
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeParams {
    /// Attitude correction time constant, s. `f64::INFINITY` disables leveling.
    pub tau: f64,
    /// Gravity magnitude, m/s².
    pub g: f64,
    /// Heading slaving time constant, s.
    pub tau_heading: f64,
    /// Minimum horizontal speed for a usable course, m/s.
    pub v_min: f64,
    pub heading_mode: HeadingMode,
}

impl Default for AttitudeParams {
    fn default() -> Self {
        Self {
            tau: 4.0,
            g: crate::DEFAULT_GRAVITY,
            tau_heading: 10.0,
            v_min: 1.0,
            heading_mode: HeadingMode::Slaved,
        }
    }
}

impl AttitudeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64, allow_inf: bool| {
            if v > 0.0 && (allow_inf || v.is_finite()) {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        positive("tau", self.tau, true)?;
        positive("g", self.g, false)?;
        positive("tau_heading", self.tau_heading, true)?;
        positive("v_min", self.v_min, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeState {
    /// Body to platform DCM.
    pub c: Dcm,
    /// Leveling control rate resolved in body axes, rad/s.
    pub omega_p_b: Vec3,
    /// Time of the last update, s.
    pub t: f64,
}

impl AttitudeState {
    pub fn new(c: Dcm, t: f64) -> Self {
        Self {
            c,
            omega_p_b: Vec3::zeros(),
            t,
        }
    }
}

/// Vertical gain vector `(0, 0, −k)` with `k = 1/(τ·g)`.
pub fn gain_vector(params: &AttitudeParams) -> Vec3 {
    Vec3::new(0.0, 0.0, -1.0 / (params.tau * params.g))
}

pub fn project_specific_force(c: &Dcm, f_b: &Vec3) -> Vec3 {
    c * f_b
}

/// Specific force in navigation axes from two GNSS velocities: `v̇ − g`.
pub fn gnss_specific_force(v_prev: &Vec3, v_curr: &Vec3, dt: f64, g: f64) -> Result<Vec3> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok((v_curr - v_prev) / dt - Vec3::new(0.0, 0.0, g))
}

/// Platform-frame leveling rate `−skew(k)·(f_gnss − f_p)`.
pub fn control_rate(k_vec: &Vec3, f_gnss: &Vec3, f_p: &Vec3) -> Vec3 {
    -(skew(k_vec) * (f_gnss - f_p))
}

/// Speed-gated proportional yaw correction in platform axes.
pub fn heading_correction_rate(c: &Dcm, course: f64, speed: f64, params: &AttitudeParams) -> Vec3 {
    if !(speed >= params.v_min) || !course.is_finite() {
        return Vec3::zeros();
    }
    let err = wrap_angle(c.yaw() - course);
    Vec3::new(0.0, 0.0, err / params.tau_heading)
}

/// Course over ground and horizontal speed of a NED velocity.
pub fn course_and_speed(v_n: &Vec3) -> (f64, f64) {
    (v_n.y.atan2(v_n.x), v_n.x.hypot(v_n.y))
}

/// Replaces the yaw of `c`, keeping roll and pitch.
pub fn with_yaw(c: &Dcm, yaw: f64) -> Result<Dcm> {
    let (roll, pitch, _) = c.to_euler()?;
    Ok(Dcm::from_euler(roll, pitch, yaw))
}

/// Measurements for one attitude step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeInputs {
    /// Raw gyro rate, rad/s.
    pub omega_meas: Vec3,
    /// Raw accelerometer specific force, m/s².
    pub f_meas: Vec3,
    /// GNSS-derived specific force in navigation axes, m/s².
    pub f_gnss: Vec3,
    /// Course over ground, rad.
    pub course: f64,
    /// Horizontal speed, m/s.
    pub speed: f64,
}

/// Advances the platform with an externally formed control rate.
///
/// `leveling_p` is handed to the bias observer (as `Cᵀ·leveling_p`);
/// `heading_p` rotates the platform but is excluded from that signal.
pub fn apply_control(
    state: &AttitudeState,
    omega_body: &Vec3,
    leveling_p: &Vec3,
    heading_p: &Vec3,
    dt: f64,
) -> Result<AttitudeState> {
    let c = dcm_step(&state.c, omega_body, &(leveling_p + heading_p), dt)?;
    Ok(AttitudeState {
        omega_p_b: c.transpose() * *leveling_p,
        c,
        t: state.t + dt,
    })
}

/// One update of the attitude observer with instantaneous measurements.
///
/// Biases are removed before use: gyro as `ω_meas − b̂_g`, accelerometer as
/// `C·(f_meas − b̂_a)` before comparison with `f_gnss`.
pub fn attitude_update(
    state: &AttitudeState,
    inputs: &AttitudeInputs,
    bias: &BiasState,
    dt: f64,
    params: &AttitudeParams,
) -> Result<AttitudeState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let f_p = project_specific_force(&state.c, &(inputs.f_meas - bias.b_a_hat));
    let leveling = control_rate(&gain_vector(params), &inputs.f_gnss, &f_p);
    let omega_body = inputs.omega_meas - bias.b_g_hat;
    match params.heading_mode {
        HeadingMode::Slaved => {
            let heading = heading_correction_rate(&state.c, inputs.course, inputs.speed, params);
            apply_control(state, &omega_body, &leveling, &heading, dt)
        }
        HeadingMode::Reset => {
            let mut next = apply_control(state, &omega_body, &leveling, &Vec3::zeros(), dt)?;
            if inputs.speed >= params.v_min {
                next.c = with_yaw(&next.c, inputs.course)?;
            }
            Ok(next)
        }
    }
}

/// Discrete first-order low-pass filter on a vector signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    tau: f64,
    state: Option<Vec3>,
}

impl LowPass {
    /// `tau = 0` makes the filter transparent.
    pub fn new(tau: f64) -> Self {
        Self { tau, state: None }
    }

    pub fn reset(&mut self) {
        self.state = None;
    }

    /// The first sample initializes the state.
    pub fn update(&mut self, x: &Vec3, dt: f64) -> Vec3 {
        let y = match self.state {
            None => *x,
            Some(prev) => prev + (x - prev) * (dt / (self.tau + dt)),
        };
        self.state = Some(y);
        y
    }
}

/// Tilt of the platform relative to the truth: angle between the platform's
/// and the true down axes, rad.
pub fn tilt_error(estimate: &Dcm, truth: &Dcm) -> f64 {
    let down_est = estimate.transpose() * Vec3::z();
    let down_true = truth.transpose() * Vec3::z();
    down_est.cross(&down_true).norm().atan2(down_est.dot(&down_true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const G: f64 = 9.8;

    fn level_inputs() -> AttitudeInputs {
        AttitudeInputs {
            omega_meas: Vec3::zeros(),
            f_meas: Vec3::new(0.0, 0.0, -G),
            f_gnss: Vec3::new(0.0, 0.0, -G),
            course: 0.0,
            speed: 0.0,
        }
    }

    #[test]
    fn gain_vector_values() {
        let p = AttitudeParams::default();
        let k = gain_vector(&p);
        assert_abs_diff_eq!(k.z, -0.025510204081632654, epsilon = 1e-15);
        assert_eq!((k.x, k.y), (0.0, 0.0));
        assert_abs_diff_eq!(k.dot(&Vec3::new(0.0, 0.0, -G)), 1.0 / p.tau, epsilon = 1e-15);

        let off = AttitudeParams {
            tau: f64::INFINITY,
            ..p
        };
        assert_eq!(gain_vector(&off).norm(), 0.0);
    }

    #[test]
    fn projection_examples() {
        let f = project_specific_force(&Dcm::identity(), &Vec3::new(0.0, 0.0, -G));
        assert_eq!(f, Vec3::new(0.0, 0.0, -G));

        let c = Dcm::from_euler(0.0, 0.0, 90f64.to_radians());
        let f = project_specific_force(&c, &Vec3::x());
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 1.0, epsilon = 1e-15);

        let c = Dcm::from_euler(0.3, -0.2, 1.1);
        let fb = Vec3::new(1.0, -2.0, -9.0);
        assert_abs_diff_eq!(project_specific_force(&c, &fb).norm(), fb.norm(), epsilon = 1e-12);
    }

    #[test]
    fn gnss_specific_force_examples() {
        let v = Vec3::new(3.0, 4.0, 0.0);
        assert_eq!(gnss_specific_force(&v, &v, 0.1, G).unwrap(), Vec3::new(0.0, 0.0, -G));
        let f = gnss_specific_force(&Vec3::new(10.0, 0.0, 0.0), &Vec3::new(10.0, 0.5, 0.0), 0.1, G).unwrap();
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.y, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, -G, epsilon = 1e-12);
        assert!(gnss_specific_force(&v, &v, 0.0, G).is_err());
        assert!(gnss_specific_force(&v, &v, -0.1, G).is_err());
    }

    #[test]
    fn gnss_specific_force_of_circular_motion() {
        let (speed, rate, dt) = (5.0, 0.25, 0.01);
        let vel = |t: f64| Vec3::new(speed * (rate * t).cos(), speed * (rate * t).sin(), 0.0);
        let f = gnss_specific_force(&vel(1.0), &vel(1.0 + dt), dt, G).unwrap();
        let horizontal = f.x.hypot(f.y);
        // chord/arc ratio of the finite difference: sinc(ω·dt/2)
        assert_abs_diff_eq!(horizontal, speed * rate, epsilon = speed * rate * 1e-5);
    }

    #[test]
    fn control_rate_examples() {
        let k = gain_vector(&AttitudeParams::default());
        let f = Vec3::new(0.3, -0.1, -G);
        assert_eq!(control_rate(&k, &f, &f), Vec3::zeros());

        let w = control_rate(&k, &(f + Vec3::new(0.1, 0.0, 0.0)), &f);
        assert_abs_diff_eq!(w.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.y, 2.551020408163265e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(w.z, 0.0, epsilon = 1e-15);

        let w = control_rate(&k, &(f + Vec3::new(0.0, 0.0, 0.4)), &f);
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn control_rate_is_horizontal() {
        let k = gain_vector(&AttitudeParams::default());
        for i in 0..50 {
            let x = i as f64;
            let d = Vec3::new((x * 1.3).sin(), (x * 0.7).cos(), x * 0.1 - 2.0);
            assert_eq!(k.dot(&control_rate(&k, &d, &Vec3::zeros())), 0.0);
        }
    }

    #[test]
    fn heading_rate_reduces_error() {
        let p = AttitudeParams::default();
        let c = Dcm::from_euler(0.0, 0.0, 0.31);
        assert_eq!(heading_correction_rate(&c, 0.31, 5.0, &p), Vec3::zeros());
        assert_eq!(heading_correction_rate(&c, 0.30, 0.0, &p), Vec3::zeros());

        let w = heading_correction_rate(&c, 0.30, 5.0, &p);
        assert_abs_diff_eq!(w.z, 0.001, epsilon = 1e-12);

        // closing the loop drives yaw toward the course
        let mut state = AttitudeState::new(c, 0.0);
        for _ in 0..100 {
            let w = heading_correction_rate(&state.c, 0.30, 5.0, &p);
            state = apply_control(&state, &Vec3::zeros(), &Vec3::zeros(), &w, 0.1).unwrap();
        }
        let remaining = state.c.yaw() - 0.30;
        assert!(remaining > 0.0 && remaining < 0.01 * (-0.9f64).exp() * 1.01);
    }

    #[test]
    fn heading_error_wraps() {
        let p = AttitudeParams::default();
        let c = Dcm::from_euler(0.0, 0.0, 3.13);
        let w = heading_correction_rate(&c, -3.13, 5.0, &p);
        assert!(w.z < 0.0 && w.z.abs() < 0.003);
    }

    #[test]
    fn level_stationary_is_fixed_point() {
        let p = AttitudeParams::default();
        let mut s = AttitudeState::new(Dcm::identity(), 0.0);
        for _ in 0..1000 {
            s = attitude_update(&s, &level_inputs(), &BiasState::default(), 0.01, &p).unwrap();
        }
        assert_eq!(s.c, Dcm::identity());
        assert_eq!(s.omega_p_b, Vec3::zeros());
        assert_abs_diff_eq!(s.t, 10.0, epsilon = 1e-9);
    }

    fn tilt_run(initial: Dcm, dt: f64, duration: f64, p: &AttitudeParams) -> Vec<(f64, f64)> {
        let mut s = AttitudeState::new(initial, 0.0);
        let steps = (duration / dt).round() as usize;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            s = attitude_update(&s, &level_inputs(), &BiasState::default(), dt, p).unwrap();
            out.push((s.t, tilt_error(&s.c, &Dcm::identity())));
        }
        out
    }

    #[test]
    fn tilt_decays_with_correction_time_constant() {
        let p = AttitudeParams::default();
        let trace = tilt_run(Dcm::from_euler(2f64.to_radians(), 0.0, 0.0), 0.01, 20.0, &p);
        // least-squares slope of ln(tilt) vs t
        let (n, mut sx, mut sy, mut sxx, mut sxy) = (trace.len() as f64, 0.0, 0.0, 0.0, 0.0);
        for &(t, tilt) in &trace {
            let y = tilt.ln();
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let fitted_tau = -1.0 / slope;
        assert!((fitted_tau - p.tau).abs() < 0.1 * p.tau, "fitted τ = {fitted_tau}");
    }

    #[test]
    fn tilt_converges_monotonically_from_large_initial_tilts() {
        let p = AttitudeParams::default();
        for &(r, pch) in &[(5.0, 0.0), (0.0, -5.0), (3.5, 3.5), (-2.0, 1.0)] {
            let init = Dcm::from_euler(f64::to_radians(r), f64::to_radians(pch), 0.7);
            let trace = tilt_run(init, 0.01, 10.0 * p.tau, &p);
            let after_transient = trace.iter().skip_while(|(t, _)| *t < p.tau);
            let mut prev = f64::INFINITY;
            for &(_, tilt) in after_transient {
                assert!(tilt <= prev);
                prev = tilt;
            }
            assert!(trace.last().unwrap().1.to_degrees() < 0.01);
        }
    }

    #[test]
    fn step_halving_consistency() {
        let p = AttitudeParams::default();
        let run = |dt: f64, steps: usize| {
            let mut s = AttitudeState::new(Dcm::from_euler(0.03, -0.02, 0.0), 0.0);
            for _ in 0..steps {
                let inputs = AttitudeInputs {
                    omega_meas: Vec3::new(0.0, 0.0, 0.25),
                    course: 0.0,
                    speed: 0.0,
                    ..level_inputs()
                };
                s = attitude_update(&s, &inputs, &BiasState::default(), dt, &p).unwrap();
            }
            s.c
        };
        let coarse = run(0.01, 1000);
        let fine = run(0.005, 2000);
        for (a, b) in coarse.matrix().iter().zip(fine.matrix().iter()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn reset_mode_overwrites_yaw() {
        let p = AttitudeParams {
            heading_mode: HeadingMode::Reset,
            ..AttitudeParams::default()
        };
        let s = AttitudeState::new(Dcm::from_euler(0.0, 0.0, 0.5), 0.0);
        let inputs = AttitudeInputs {
            course: -1.0,
            speed: 5.0,
            ..level_inputs()
        };
        let next = attitude_update(&s, &inputs, &BiasState::default(), 0.01, &p).unwrap();
        assert_abs_diff_eq!(next.c.yaw(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn low_pass_behaviour() {
        let mut lp = LowPass::new(0.2);
        assert_eq!(lp.update(&Vec3::x(), 0.1), Vec3::x());
        let y = lp.update(&Vec3::zeros(), 0.1);
        assert_abs_diff_eq!(y.x, 2.0 / 3.0, epsilon = 1e-15);
        let mut through = LowPass::new(0.0);
        through.update(&Vec3::x(), 0.1);
        assert_eq!(through.update(&Vec3::y(), 0.1), Vec3::y());
    }

    #[test]
    fn params_validation() {
        assert!(AttitudeParams::default().validate().is_ok());
        let bad = AttitudeParams {
            tau: 0.0,
            ..AttitudeParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = AttitudeParams {
            v_min: -1.0,
            ..AttitudeParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
