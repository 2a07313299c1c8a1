//! The complete estimator over a time-ordered sensor log.
//!
//! The IMU drives the platform at its own rate. At each GNSS epoch the
//! velocity difference since the previous epoch is compared with the
//! integral of the platform-projected specific force over the same interval,
//! so both sides describe the same time span. The mismatch is expressed in
//! body axes at the middle of that span, low-pass filtered there and held
//! until the next epoch, being rotated back through the current attitude at
//! every IMU step. In a steady turn the error pattern is fixed in body axes,
//! so the hold and filter delays do not rotate it.

use crate::attitude::{
    apply_control, control_rate, course_and_speed, gain_vector, gnss_specific_force, heading_correction_rate,
    project_specific_force, with_yaw, AttitudeParams, AttitudeState, HeadingMode, LowPass,
};
use crate::bias::{accel_bias_step, gyro_bias_step, BiasParams, BiasState};
use crate::error::{Error, Result};
use crate::math::{orthonormalize, Dcm, Vec3};
use crate::sim::SensorRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverConfig {
    pub attitude: AttitudeParams,
    pub bias: BiasParams,
    /// Low-pass time constant applied to the specific-force mismatch, s.
    pub gnss_filter_tau: f64,
    /// Accelerometer averaging window for coarse leveling, s.
    pub align_window: f64,
    /// Corrections and bias estimation freeze when the last valid GNSS epoch
    /// is older than this, s.
    pub gnss_timeout: f64,
    /// IMU sample spacing above which the log is treated as broken, s.
    pub max_imu_gap: f64,
    /// Emit one output every this many IMU samples.
    pub output_decimation: usize,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            attitude: AttitudeParams::default(),
            bias: BiasParams::default(),
            gnss_filter_tau: 0.2,
            align_window: 2.0,
            gnss_timeout: 0.5,
            max_imu_gap: 0.1,
            output_decimation: 10,
        }
    }
}

impl ObserverConfig {
    /// Observer constants in the units they are usually quoted in.
    pub fn with_constants(tau: f64, tau_g: f64, omega_a_dps: f64) -> Self {
        let mut cfg = Self::default();
        cfg.attitude.tau = tau;
        cfg.bias.tau_g = tau_g;
        cfg.bias.omega_a = omega_a_dps.to_radians();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.attitude.validate()?;
        self.bias.validate()?;
        if self.attitude.g != self.bias.g {
            return Err(Error::param("g", "attitude and bias gravity must agree"));
        }
        if !(self.gnss_filter_tau >= 0.0 && self.gnss_filter_tau.is_finite()) {
            return Err(Error::param("gnss_filter_tau", "must be >= 0"));
        }
        if !(self.align_window >= 0.0 && self.align_window.is_finite()) {
            return Err(Error::param("align_window", "must be >= 0"));
        }
        if !(self.gnss_timeout > 0.0) {
            return Err(Error::param("gnss_timeout", "must be > 0"));
        }
        if !(self.max_imu_gap > 0.0) {
            return Err(Error::param("max_imu_gap", "must be > 0"));
        }
        if self.output_decimation == 0 {
            return Err(Error::param("output_decimation", "must be >= 1"));
        }
        Ok(())
    }
}

/// Estimator output at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutput {
    pub t: f64,
    pub bias: BiasState,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Leveling control rate in body axes, rad/s.
    pub omega_p_b: Vec3,
    /// Bias-corrected yaw rate, rad/s.
    pub omega_zb: f64,
    /// Corrections were suspended for lack of GNSS.
    pub frozen: bool,
}

#[derive(Debug, Clone)]
struct Alignment {
    t0: Option<f64>,
    accel_sum: Vec3,
    count: usize,
    course: Option<f64>,
}

#[derive(Debug, Clone)]
struct Running {
    att: AttitudeState,
    bias: BiasState,
    prev_t: f64,
    prev_gyro: Vec3,
    prev_fp: Vec3,
    fp_integral: Vec3,
    last_gnss: Option<(f64, Vec3)>,
    last_valid_gnss_t: Option<f64>,
    /// Attitude at the previous GNSS epoch.
    c_epoch: Dcm,
    lp_mismatch: LowPass,
    /// Filtered specific-force mismatch in body axes, m/s².
    mismatch_b: Vec3,
    heading_p: Vec3,
    have_mismatch: bool,
    yaw_pending: bool,
    samples_since_output: usize,
}

#[derive(Debug, Clone)]
enum Phase {
    Aligning(Alignment),
    /// Waiting for the first record, attitude already known.
    Primed(Dcm),
    Running(Box<Running>),
}

/// Counters describing log quality over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GapStats {
    /// IMU spacing larger than `max_imu_gap`.
    pub imu_gaps: usize,
    /// IMU samples processed with corrections frozen.
    pub frozen_samples: usize,
}

#[derive(Debug, Clone)]
pub struct Observer {
    cfg: ObserverConfig,
    phase: Phase,
    gaps: GapStats,
}

impl Observer {
    /// Starts with coarse leveling from the accelerometers and yaw from GNSS.
    pub fn new(cfg: ObserverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            phase: Phase::Aligning(Alignment {
                t0: None,
                accel_sum: Vec3::zeros(),
                count: 0,
                course: None,
            }),
            gaps: GapStats::default(),
        })
    }

    /// Skips alignment; the first record is taken at attitude `c`.
    pub fn with_attitude(cfg: ObserverConfig, c: Dcm) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            phase: Phase::Primed(c),
            gaps: GapStats::default(),
        })
    }

    pub fn config(&self) -> &ObserverConfig {
        &self.cfg
    }

    pub fn gaps(&self) -> GapStats {
        self.gaps
    }

    pub fn attitude(&self) -> Option<&AttitudeState> {
        match &self.phase {
            Phase::Running(r) => Some(&r.att),
            _ => None,
        }
    }

    pub fn bias(&self) -> Option<&BiasState> {
        match &self.phase {
            Phase::Running(r) => Some(&r.bias),
            _ => None,
        }
    }

    /// Processes one record; returns an output every `output_decimation`
    /// samples once aligned.
    pub fn step(&mut self, rec: &SensorRecord) -> Result<Option<EpochOutput>> {
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !(rec.t.is_finite() && finite(&rec.gyro) && finite(&rec.accel) && rec.gnss_v.as_ref().is_none_or(finite)) {
            return Err(Error::NonFinite("sensor record"));
        }
        match &mut self.phase {
            Phase::Aligning(al) => {
                let t0 = *al.t0.get_or_insert(rec.t);
                if let Some(v) = rec.gnss_v {
                    let (course, speed) = course_and_speed(&v);
                    if speed >= self.cfg.attitude.v_min {
                        al.course = Some(course);
                    }
                }
                if rec.t - t0 < self.cfg.align_window || al.count == 0 {
                    al.accel_sum += rec.accel;
                    al.count += 1;
                    return Ok(None);
                }
                let f = al.accel_sum / al.count as f64;
                let roll = (-f.y).atan2(-f.z);
                let pitch = f.x.atan2(f.y.hypot(f.z));
                let c = Dcm::from_euler(roll, pitch, al.course.unwrap_or(0.0));
                let yaw_pending = al.course.is_none();
                self.start(rec, c, yaw_pending);
                Ok(None)
            }
            Phase::Primed(c) => {
                let c = *c;
                self.start(rec, c, false);
                Ok(None)
            }
            Phase::Running(_) => self.advance(rec),
        }
    }

    fn start(&mut self, rec: &SensorRecord, c: Dcm, yaw_pending: bool) {
        let mut run = Running {
            att: AttitudeState::new(c, rec.t),
            bias: BiasState::default(),
            prev_t: rec.t,
            prev_gyro: rec.gyro,
            prev_fp: project_specific_force(&c, &rec.accel),
            fp_integral: Vec3::zeros(),
            last_gnss: None,
            last_valid_gnss_t: None,
            c_epoch: c,
            lp_mismatch: LowPass::new(self.cfg.gnss_filter_tau),
            mismatch_b: Vec3::zeros(),
            heading_p: Vec3::zeros(),
            have_mismatch: false,
            yaw_pending,
            samples_since_output: 0,
        };
        if let Some(v) = rec.gnss_v {
            run.last_gnss = Some((rec.t, v));
            run.last_valid_gnss_t = Some(rec.t);
        }
        self.phase = Phase::Running(Box::new(run));
    }

    fn advance(&mut self, rec: &SensorRecord) -> Result<Option<EpochOutput>> {
        let cfg = self.cfg;
        let k_vec = gain_vector(&cfg.attitude);
        let Phase::Running(run) = &mut self.phase else {
            unreachable!("advance is only called while running")
        };
        let dt = rec.t - run.prev_t;
        if !(dt > 0.0) {
            return Err(Error::param(
                "t",
                format!("timestamps must be strictly increasing ({} after {})", rec.t, run.prev_t),
            ));
        }

        let frozen;
        if dt > cfg.max_imu_gap {
            self.gaps.imu_gaps += 1;
            frozen = true;
            run.last_gnss = None;
            run.have_mismatch = false;
            run.lp_mismatch.reset();
            run.att.t = rec.t;
            run.att.omega_p_b = Vec3::zeros();
        } else {
            frozen = !run.have_mismatch || run.last_valid_gnss_t.is_none_or(|tg| rec.t - tg > cfg.gnss_timeout);
            let (leveling, heading) = if frozen {
                (Vec3::zeros(), Vec3::zeros())
            } else {
                let mismatch_p = run.att.c * run.mismatch_b;
                (control_rate(&k_vec, &mismatch_p, &Vec3::zeros()), run.heading_p)
            };
            let omega_body = (run.prev_gyro + rec.gyro) * 0.5 - run.bias.b_g_hat;
            run.att = apply_control(&run.att, &omega_body, &leveling, &heading, dt)?;
            if !frozen {
                let omega_zb = rec.gyro.z - run.bias.b_g_hat.z;
                run.bias = gyro_bias_step(&run.bias, &run.att.omega_p_b, dt, &cfg.bias);
                run.bias = accel_bias_step(&run.bias, &run.att.omega_p_b, omega_zb, dt, &cfg.bias);
            }
        }
        if frozen {
            self.gaps.frozen_samples += 1;
        }

        let fp = project_specific_force(&run.att.c, &(rec.accel - run.bias.b_a_hat));
        run.fp_integral += (run.prev_fp + fp) * (0.5 * dt);
        run.prev_fp = fp;
        run.prev_t = rec.t;
        run.prev_gyro = rec.gyro;

        if let Some(v) = rec.gnss_v {
            let (course, speed) = course_and_speed(&v);
            match run.last_gnss {
                Some((tp, vp)) if rec.t - tp <= cfg.gnss_timeout => {
                    let span = rec.t - tp;
                    let f_gnss = gnss_specific_force(&vp, &v, span, cfg.attitude.g)?;
                    let f_plat = run.fp_integral / span;
                    let c_mid = orthonormalize(&((run.c_epoch.matrix() + run.att.c.matrix()) * 0.5))?;
                    let raw_b = c_mid.transpose() * (f_gnss - f_plat);
                    run.mismatch_b = run.lp_mismatch.update(&raw_b, span);
                    run.have_mismatch = true;
                }
                _ => {
                    run.lp_mismatch.reset();
                    run.mismatch_b = Vec3::zeros();
                    run.have_mismatch = false;
                }
            }
            let course_ok = speed >= cfg.attitude.v_min;
            if run.yaw_pending && course_ok {
                run.att.c = with_yaw(&run.att.c, course)?;
                run.yaw_pending = false;
            }
            run.heading_p = match cfg.attitude.heading_mode {
                HeadingMode::Slaved => heading_correction_rate(&run.att.c, course, speed, &cfg.attitude),
                HeadingMode::Reset => {
                    if course_ok {
                        run.att.c = with_yaw(&run.att.c, course)?;
                    }
                    Vec3::zeros()
                }
            };
            run.last_gnss = Some((rec.t, v));
            run.last_valid_gnss_t = Some(rec.t);
            run.c_epoch = run.att.c;
            run.fp_integral = Vec3::zeros();
        }

        run.samples_since_output += 1;
        if run.samples_since_output < cfg.output_decimation {
            return Ok(None);
        }
        run.samples_since_output = 0;
        let (roll, pitch, yaw) = run.att.c.to_euler()?;
        Ok(Some(EpochOutput {
            t: rec.t,
            bias: run.bias,
            roll,
            pitch,
            yaw,
            omega_p_b: run.att.omega_p_b,
            omega_zb: rec.gyro.z - run.bias.b_g_hat.z,
            frozen,
        }))
    }
}

/// Outputs of a full pass over a log.
#[derive(Debug, Clone)]
pub struct EstimationRun {
    pub config: ObserverConfig,
    pub outputs: Vec<EpochOutput>,
    pub gaps: GapStats,
}

impl EstimationRun {
    pub fn final_bias(&self) -> Option<BiasState> {
        self.outputs.last().map(|o| o.bias)
    }
}

/// Runs a fresh observer (with coarse alignment) over `records`.
pub fn run_estimation(records: &[SensorRecord], cfg: &ObserverConfig) -> Result<EstimationRun> {
    run_with(Observer::new(*cfg)?, records)
}

/// Runs `observer` over `records`.
pub fn run_with(mut observer: Observer, records: &[SensorRecord]) -> Result<EstimationRun> {
    let mut outputs = Vec::with_capacity(records.len() / observer.cfg.output_decimation + 1);
    for rec in records {
        if let Some(out) = observer.step(rec)? {
            outputs.push(out);
        }
    }
    Ok(EstimationRun {
        config: observer.cfg,
        outputs,
        gaps: observer.gaps,
    })
}
