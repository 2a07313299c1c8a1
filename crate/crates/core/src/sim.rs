//! Kinematic land-vehicle trajectories and sensor corruption.
//!
//! The vehicle follows straight segments and constant-rate arcs at constant
//! speed with no sideslip, so the course over ground equals the yaw angle.
//! Roll and pitch follow an optional terrain sinusoid. Body rates and specific
//! forces are computed analytically from the trajectory, so the truth is
//! exactly self-consistent at every sample.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{wrap_angle, Dcm, Vec3};

/// Roll/pitch amplitude above which the small-angle theory no longer holds, rad.
pub const ENVELOPE_TILT_LIMIT: f64 = 10.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Straight,
    /// Constant yaw rate, rad/s (positive turns right in NED).
    Arc { turn_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// s
    pub duration: f64,
    /// m/s
    pub speed: f64,
}

impl Segment {
    pub fn straight(duration: f64, speed: f64) -> Self {
        Self {
            kind: SegmentKind::Straight,
            duration,
            speed,
        }
    }

    pub fn arc(duration: f64, speed: f64, turn_rate: f64) -> Self {
        Self {
            kind: SegmentKind::Arc { turn_rate },
            duration,
            speed,
        }
    }

    pub fn turn_rate(&self) -> f64 {
        match self.kind {
            SegmentKind::Straight => 0.0,
            SegmentKind::Arc { turn_rate } => turn_rate,
        }
    }
}

/// Roll/pitch rocking: `roll = A_r·sin(2πt/P)`, `pitch = A_p·cos(2πt/P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terrain {
    pub roll_amp: f64,
    pub pitch_amp: f64,
    pub period: f64,
}

impl Terrain {
    pub const FLAT: Terrain = Terrain {
        roll_amp: 0.0,
        pitch_amp: 0.0,
        period: 60.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rates {
    pub imu_hz: u32,
    pub gnss_hz: u32,
}

impl Rates {
    pub fn imu_dt(&self) -> f64 {
        1.0 / self.imu_hz as f64
    }

    /// IMU samples per GNSS epoch.
    pub fn decimation(&self) -> u32 {
        self.imu_hz / self.gnss_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Gyro white noise density, rad/s/√Hz.
    pub gyro_density: f64,
    /// Accelerometer white noise density, m/s²/√Hz.
    pub accel_density: f64,
    /// Stationary std of the GNSS velocity error, m/s.
    pub gnss_vel_sigma: f64,
    /// Correlation time of the first-order Gauss-Markov velocity error, s.
    pub gnss_vel_corr_time: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        gyro_density: 0.0,
        accel_density: 0.0,
        gnss_vel_sigma: 0.0,
        gnss_vel_corr_time: 1.0,
    };
}

impl Default for NoiseConfig {
    /// Consumer MEMS grade at 100 Hz: 0.005 rad/s and 0.03 m/s² per sample.
    fn default() -> Self {
        Self {
            gyro_density: 0.0005,
            accel_density: 0.003,
            gnss_vel_sigma: 0.03,
            gnss_vel_corr_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasSet {
    /// rad/s
    pub b_g: Vec3,
    /// m/s²
    pub b_a: Vec3,
}

impl BiasSet {
    pub fn new(b_g: Vec3, b_a: Vec3) -> Self {
        Self { b_g, b_a }
    }
}

impl std::ops::Add for BiasSet {
    type Output = BiasSet;

    fn add(self, rhs: BiasSet) -> BiasSet {
        BiasSet::new(self.b_g + rhs.b_g, self.b_a + rhs.b_a)
    }
}

/// Interval during which GNSS epochs are flagged invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnssOutage {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub segments: Vec<Segment>,
    pub terrain: Terrain,
    pub rates: Rates,
    pub noise: NoiseConfig,
    /// Biases the sensors are assumed to have before any injection.
    pub true_biases: BiasSet,
    /// Known artificial biases added on top.
    pub injected_biases: BiasSet,
    pub seed: u64,
    pub g: f64,
    /// Yaw at t = 0, rad.
    pub initial_yaw: f64,
    pub gnss_outages: Vec<GnssOutage>,
}

impl Default for ScenarioConfig {
    /// 600 s at 5 m/s: 60 s straights alternating with 20 s turns at ±15 deg/s.
    /// One interpretation of a curved test path, not a reconstruction of any
    /// specific field data.
    fn default() -> Self {
        let (speed, turn) = (5.0, 15f64.to_radians());
        let mut segments = Vec::new();
        let mut sign = 1.0;
        for _ in 0..7 {
            segments.push(Segment::straight(60.0, speed));
            segments.push(Segment::arc(20.0, speed, sign * turn));
            sign = -sign;
        }
        segments.push(Segment::straight(40.0, speed));
        Self {
            segments,
            terrain: Terrain::FLAT,
            rates: Rates {
                imu_hz: 100,
                gnss_hz: 10,
            },
            noise: NoiseConfig::default(),
            true_biases: BiasSet::default(),
            injected_biases: BiasSet::default(),
            seed: 1,
            g: crate::DEFAULT_GRAVITY,
            initial_yaw: 0.0,
            gnss_outages: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn sample_count(&self) -> usize {
        (self.duration() * self.rates.imu_hz as f64).round() as usize
    }

    /// Bias actually present in the generated sensor data.
    pub fn total_biases(&self) -> BiasSet {
        self.true_biases + self.injected_biases
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::param("segments", "at least one segment is required"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                return Err(Error::param(format!("segments[{i}].duration_s"), "must be > 0"));
            }
            if !(seg.speed >= 0.0 && seg.speed.is_finite()) {
                return Err(Error::param(format!("segments[{i}].speed_m_s"), "must be >= 0"));
            }
            if !seg.turn_rate().is_finite() {
                return Err(Error::param(format!("segments[{i}].turn_rate_dps"), "must be finite"));
            }
            if i > 0 && seg.speed != self.segments[i - 1].speed {
                return Err(Error::param(
                    format!("segments[{i}].speed_m_s"),
                    "must equal the previous segment's speed (the kinematic model has no longitudinal acceleration)",
                ));
            }
        }
        let Rates { imu_hz, gnss_hz } = self.rates;
        if imu_hz == 0 {
            return Err(Error::param("rates.imu_hz", "must be > 0"));
        }
        if gnss_hz == 0 || imu_hz % gnss_hz != 0 {
            return Err(Error::param("rates.gnss_hz", "must be > 0 and divide imu_hz"));
        }
        let n = &self.noise;
        for (name, v) in [
            ("noise.gyro_density_rad_s_rthz", n.gyro_density),
            ("noise.accel_density_m_s2_rthz", n.accel_density),
            ("noise.gnss_vel_sigma_m_s", n.gnss_vel_sigma),
            ("noise.gnss_vel_corr_time_s", n.gnss_vel_corr_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::param("g_m_s2", "must be > 0"));
        }
        let t = &self.terrain;
        if !(t.roll_amp.is_finite() && t.pitch_amp.is_finite()) {
            return Err(Error::param("terrain", "amplitudes must be finite"));
        }
        if (t.roll_amp != 0.0 || t.pitch_amp != 0.0) && !(t.period > 0.0 && t.period.is_finite()) {
            return Err(Error::param("terrain.period_s", "must be > 0"));
        }
        for b in [self.true_biases, self.injected_biases] {
            if !(b.b_g.iter().chain(b.b_a.iter()).all(|x| x.is_finite())) {
                return Err(Error::param("biases", "must be finite"));
            }
        }
        for (i, o) in self.gnss_outages.iter().enumerate() {
            if !(o.duration > 0.0 && o.start.is_finite() && o.duration.is_finite()) {
                return Err(Error::param(format!("gnss_outages[{i}]"), "needs finite start and duration > 0"));
            }
        }
        Ok(())
    }

    /// Messages for configurations outside the small roll/pitch envelope.
    pub fn envelope_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, amp) in [("roll", self.terrain.roll_amp), ("pitch", self.terrain.pitch_amp)] {
            if amp.abs() >= ENVELOPE_TILT_LIMIT {
                out.push(format!(
                    "terrain {name} amplitude {:.1} deg exceeds the 10 deg small-angle envelope; observer theory does not apply",
                    amp.abs().to_degrees()
                ));
            }
        }
        out
    }

    fn in_outage(&self, t: f64) -> bool {
        self.gnss_outages
            .iter()
            .any(|o| t >= o.start && t < o.start + o.duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    /// North/East position, m.
    pub pos_ne: [f64; 2],
    /// NED velocity, m/s.
    pub v_n: Vec3,
    /// NED acceleration, m/s².
    pub a_n: Vec3,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Body rate, rad/s.
    pub omega_b: Vec3,
    /// Specific force in body axes, m/s².
    pub f_b: Vec3,
}

impl TruthSample {
    pub fn dcm(&self) -> Dcm {
        Dcm::from_euler(self.roll, self.pitch, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorRecord {
    pub t: f64,
    /// rad/s
    pub gyro: Vec3,
    /// m/s²
    pub accel: Vec3,
    /// NED velocity on valid GNSS epochs, m/s.
    pub gnss_v: Option<Vec3>,
}

struct SegmentStart {
    t0: f64,
    yaw0: f64,
    pos0: [f64; 2],
}

fn segment_starts(config: &ScenarioConfig) -> Vec<SegmentStart> {
    // Interior boundaries sit half a sample early, midway between IMU
    // samples, so a rate step integrates exactly under the trapezoid rule.
    let shift = 0.5 * config.rates.imu_dt();
    let mut out = Vec::with_capacity(config.segments.len());
    let (mut t0, mut yaw0, mut pos0) = (0.0, config.initial_yaw, [0.0, 0.0]);
    let mut nominal_end = 0.0;
    for seg in &config.segments {
        out.push(SegmentStart { t0, yaw0, pos0 });
        nominal_end += seg.duration;
        let length = nominal_end - shift - t0;
        pos0 = position_in_segment(seg, yaw0, pos0, length);
        yaw0 += seg.turn_rate() * length;
        t0 = nominal_end - shift;
    }
    out
}

fn position_in_segment(seg: &Segment, yaw0: f64, pos0: [f64; 2], dt: f64) -> [f64; 2] {
    let v = seg.speed;
    match seg.kind {
        SegmentKind::Arc { turn_rate } if turn_rate != 0.0 => {
            let yaw = yaw0 + turn_rate * dt;
            let r = v / turn_rate;
            [
                pos0[0] + r * (yaw.sin() - yaw0.sin()),
                pos0[1] + r * (yaw0.cos() - yaw.cos()),
            ]
        }
        _ => [pos0[0] + v * dt * yaw0.cos(), pos0[1] + v * dt * yaw0.sin()],
    }
}

/// Samples the trajectory at the IMU rate.
pub fn generate_truth(config: &ScenarioConfig) -> Result<Vec<TruthSample>> {
    config.validate()?;
    let starts = segment_starts(config);
    let n = config.sample_count();
    let dt = config.rates.imu_dt();
    let g_n = Vec3::new(0.0, 0.0, config.g);
    let Terrain {
        roll_amp,
        pitch_amp,
        period,
    } = config.terrain;
    let wt = if roll_amp != 0.0 || pitch_amp != 0.0 { TAU / period } else { 0.0 };

    let mut idx = 0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        while idx + 1 < starts.len() && t >= starts[idx + 1].t0 {
            idx += 1;
        }
        let seg = &config.segments[idx];
        let start = &starts[idx];
        let local = t - start.t0;
        let turn = seg.turn_rate();
        let yaw_raw = start.yaw0 + turn * local;
        let (sy, cy) = yaw_raw.sin_cos();
        let v_n = Vec3::new(seg.speed * cy, seg.speed * sy, 0.0);
        let a_n = Vec3::new(-seg.speed * turn * sy, seg.speed * turn * cy, 0.0);

        let (roll, roll_rate) = (roll_amp * (wt * t).sin(), roll_amp * wt * (wt * t).cos());
        let (pitch, pitch_rate) = (pitch_amp * (wt * t).cos(), -pitch_amp * wt * (wt * t).sin());
        // Euler-angle rates to body rates, z-y-x convention
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let omega_b = Vec3::new(
            roll_rate - turn * sp,
            pitch_rate * cr + turn * sr * cp,
            -pitch_rate * sr + turn * cr * cp,
        );
        let c = Dcm::from_euler(roll, pitch, yaw_raw);
        let f_b = c.transpose() * (a_n - g_n);

        out.push(TruthSample {
            t,
            pos_ne: position_in_segment(seg, start.yaw0, start.pos0, local),
            v_n,
            a_n,
            roll,
            pitch,
            yaw: wrap_angle(yaw_raw),
            omega_b,
            f_b,
        });
    }
    Ok(out)
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    Vec3::new(draw(), draw(), draw())
}

/// Adds biases, white IMU noise and Gauss-Markov GNSS velocity error.
/// Deterministic for a fixed `config.seed`.
pub fn corrupt(truth: &[TruthSample], config: &ScenarioConfig) -> Vec<SensorRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let biases = config.total_biases();
    let n = &config.noise;
    let fs = config.rates.imu_hz as f64;
    let gyro_sigma = n.gyro_density * fs.sqrt();
    let accel_sigma = n.accel_density * fs.sqrt();
    let decimation = config.rates.decimation() as usize;
    let gnss_dt = decimation as f64 / fs;
    let phi = if n.gnss_vel_corr_time > 0.0 {
        (-gnss_dt / n.gnss_vel_corr_time).exp()
    } else {
        0.0
    };
    let drive = n.gnss_vel_sigma * (1.0 - phi * phi).sqrt();
    let mut gm = normal3(&mut rng) * n.gnss_vel_sigma;

    truth
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let gyro = s.omega_b + biases.b_g + normal3(&mut rng) * gyro_sigma;
            let accel = s.f_b + biases.b_a + normal3(&mut rng) * accel_sigma;
            let gnss_v = if k % decimation == 0 {
                if k > 0 {
                    gm = gm * phi + normal3(&mut rng) * drive;
                }
                (!config.in_outage(s.t)).then(|| s.v_n + gm)
            } else {
                None
            };
            SensorRecord {
                t: s.t,
                gyro,
                accel,
                gnss_v,
            }
        })
        .collect()
}

/// Truth and sensor streams for a scenario.
pub fn simulate(config: &ScenarioConfig) -> Result<(Vec<TruthSample>, Vec<SensorRecord>)> {
    let truth = generate_truth(config)?;
    let sensors = corrupt(&truth, config);
    Ok((truth, sensors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quiet(segments: Vec<Segment>) -> ScenarioConfig {
        ScenarioConfig {
            segments,
            noise: NoiseConfig::NONE,
            ..ScenarioConfig::default()
        }
    }

    fn consistency_error(s: &TruthSample, g: f64) -> f64 {
        (s.dcm() * s.f_b - (s.a_n - Vec3::new(0.0, 0.0, g))).amax()
    }

    #[test]
    fn straight_flat_is_unaccelerated() {
        let cfg = quiet(vec![Segment::straight(10.0, 5.0)]);
        let truth = generate_truth(&cfg).unwrap();
        assert_eq!(truth.len(), 1000);
        for s in &truth {
            assert_eq!(s.omega_b, Vec3::zeros());
            assert_abs_diff_eq!(s.f_b.x, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.f_b.y, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.f_b.z, -9.8, epsilon = 1e-12);
            assert_eq!(s.v_n, truth[0].v_n);
        }
    }

    #[test]
    fn arc_produces_centripetal_force_in_body_y() {
        let cfg = quiet(vec![Segment::arc(20.0, 5.0, 0.25)]);
        for s in generate_truth(&cfg).unwrap() {
            assert_abs_diff_eq!(s.f_b.x, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.f_b.y, 1.25, epsilon = 1e-12);
            assert_abs_diff_eq!(s.omega_b.z, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn closed_figure_returns_to_start() {
        let half = std::f64::consts::PI / 20.0;
        let cfg = quiet(vec![
            Segment::straight(30.0, 5.0),
            Segment::arc(20.0, 5.0, half),
            Segment::straight(30.0, 5.0),
            Segment::arc(20.0, 5.0, half),
        ]);
        let truth = generate_truth(&cfg).unwrap();
        let last = truth.last().unwrap();
        // boundaries sit half a step early, so the loop closes half an IMU
        // step after the final sample
        let h = 0.5 * cfg.rates.imu_dt();
        let end = [last.pos_ne[0] + last.v_n.x * h, last.pos_ne[1] + last.v_n.y * h];
        // and the opening straight is that much shorter than the return leg
        let gap = [end[0] + 5.0 * h, end[1]];
        assert!(gap[0].hypot(gap[1]) < 1e-4, "{end:?}");
        assert_abs_diff_eq!(wrap_angle(last.yaw + half * h), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn truth_is_self_consistent_on_rough_terrain() {
        let cfg = ScenarioConfig {
            terrain: Terrain {
                roll_amp: 4f64.to_radians(),
                pitch_amp: 3f64.to_radians(),
                period: 17.0,
            },
            ..ScenarioConfig::default()
        };
        let truth = generate_truth(&cfg).unwrap();
        let speed = cfg.segments[0].speed;
        for s in &truth {
            assert!(consistency_error(s, cfg.g) < 1e-6);
            assert!((s.v_n.norm() - speed).abs() < 1e-9);
            assert!(s.roll.abs() < ENVELOPE_TILT_LIMIT && s.pitch.abs() < ENVELOPE_TILT_LIMIT);
        }
        assert!(cfg.envelope_warnings().is_empty());
    }

    #[test]
    fn body_rates_match_attitude_derivative() {
        // finite-difference oracle: Ċ ≈ C·skew(ω_b)
        let mut cfg = quiet(vec![Segment::arc(30.0, 5.0, 0.2)]);
        cfg.terrain = Terrain {
            roll_amp: 0.05,
            pitch_amp: 0.04,
            period: 7.0,
        };
        let truth = generate_truth(&cfg).unwrap();
        let dt = cfg.rates.imu_dt();
        for w in truth.windows(3).step_by(97) {
            let dc = (w[2].dcm().matrix() - w[0].dcm().matrix()) / (2.0 * dt);
            let est = w[1].dcm().transpose().matrix() * dc;
            let omega = Vec3::new(est[(2, 1)], est[(0, 2)], est[(1, 0)]);
            assert!((omega - w[1].omega_b).amax() < 1e-4);
        }
    }

    #[test]
    fn envelope_warning_for_steep_terrain() {
        let mut cfg = ScenarioConfig::default();
        cfg.terrain.roll_amp = 12f64.to_radians();
        assert_eq!(cfg.envelope_warnings().len(), 1);
    }

    #[test]
    fn noise_free_unbiased_sensors_equal_truth() {
        let cfg = quiet(vec![Segment::straight(5.0, 5.0), Segment::arc(5.0, 5.0, -0.2)]);
        let (truth, sensors) = simulate(&cfg).unwrap();
        for (s, r) in truth.iter().zip(&sensors) {
            assert_eq!(r.t, s.t);
            assert_eq!(r.gyro, s.omega_b);
            assert_eq!(r.accel, s.f_b);
            if let Some(v) = r.gnss_v {
                assert_eq!(v, s.v_n);
            }
        }
        let epochs = sensors.iter().filter(|r| r.gnss_v.is_some()).count();
        assert_eq!(epochs, 100);
    }

    #[test]
    fn biases_are_additive() {
        let mut cfg = quiet(vec![Segment::arc(5.0, 5.0, 0.2)]);
        cfg.true_biases = BiasSet::new(Vec3::new(1e-3, 0.0, 0.0), Vec3::new(0.0, 0.05, 0.0));
        cfg.injected_biases = BiasSet::new(Vec3::new(2e-3, -1e-3, 0.0), Vec3::new(0.1, 0.0, 0.0));
        let (truth, sensors) = simulate(&cfg).unwrap();
        let total = cfg.total_biases();
        for (s, r) in truth.iter().zip(&sensors) {
            assert!((r.gyro - s.omega_b - total.b_g).amax() < 1e-15);
            assert!((r.accel - s.f_b - total.b_a).amax() < 1e-14);
        }
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let cfg = ScenarioConfig {
            segments: vec![Segment::straight(10.0, 5.0)],
            ..ScenarioConfig::default()
        };
        let (_, a) = simulate(&cfg).unwrap();
        let (_, b) = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        let other = ScenarioConfig { seed: 2, ..cfg };
        let (_, c) = simulate(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_levels_match_configuration() {
        let cfg = ScenarioConfig {
            segments: vec![Segment::straight(200.0, 5.0)],
            ..ScenarioConfig::default()
        };
        let (truth, sensors) = simulate(&cfg).unwrap();
        let n = sensors.len() as f64;
        let gyro_var: f64 = truth.iter().zip(&sensors).map(|(s, r)| (r.gyro.x - s.omega_b.x).powi(2)).sum::<f64>() / n;
        assert_abs_diff_eq!(gyro_var.sqrt(), 0.005, epsilon = 1e-4);
        let vel: Vec<f64> = truth
            .iter()
            .zip(&sensors)
            .filter_map(|(s, r)| r.gnss_v.map(|v| v.x - s.v_n.x))
            .collect();
        let var = vel.iter().map(|e| e * e).sum::<f64>() / vel.len() as f64;
        // correlated samples: loose bound
        assert!((var.sqrt() - 0.03).abs() < 0.01);
    }

    #[test]
    fn outages_clear_gnss() {
        let mut cfg = quiet(vec![Segment::straight(10.0, 5.0)]);
        cfg.gnss_outages.push(GnssOutage {
            start: 2.0,
            duration: 3.0,
        });
        let (_, sensors) = simulate(&cfg).unwrap();
        for r in &sensors {
            if r.t >= 2.0 && r.t < 5.0 {
                assert!(r.gnss_v.is_none());
            }
        }
        assert_eq!(sensors.iter().filter(|r| r.gnss_v.is_some()).count(), 70);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = ScenarioConfig::default();
        cfg.segments[3].duration = -1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("segments[3].duration_s"), "{err}");

        let mut cfg = ScenarioConfig::default();
        cfg.rates.gnss_hz = 7;
        assert!(cfg.validate().unwrap_err().to_string().contains("rates.gnss_hz"));

        let mut cfg = ScenarioConfig::default();
        cfg.segments[1].speed = 6.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("segments[1].speed_m_s"));

        let cfg = ScenarioConfig {
            segments: vec![],
            ..ScenarioConfig::default()
        };
        assert!(generate_truth(&cfg).is_err());
    }

    #[test]
    fn default_scenario_shape() {
        let cfg = ScenarioConfig::default();
        assert_abs_diff_eq!(cfg.duration(), 600.0, epsilon = 1e-12);
        assert_eq!(cfg.sample_count(), 60_000);
        let turns: Vec<f64> = cfg.segments.iter().map(|s| s.turn_rate()).filter(|w| *w != 0.0).collect();
        assert_eq!(turns.len(), 7);
        assert!(turns.windows(2).all(|w| w[0] == -w[1]));
    }
}
