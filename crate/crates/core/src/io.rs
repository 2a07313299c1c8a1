//! Scenario files and CSV formats.
//!
//! The sensor log is `t,gx,gy,gz,ax,ay,az,gnss_valid,vn,ve,vd` in SI units,
//! every number printed with 9 significant digits and the velocity columns
//! left empty on rows without a GNSS epoch. Other outputs use degree-based
//! units for angles, named in their headers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bias::BiasState;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::metrics::{AxisStats, RunReport, SweepReport};
use crate::observer::EpochOutput;
use crate::sim::{BiasSet, GnssOutage, NoiseConfig, Rates, ScenarioConfig, Segment, SensorRecord, Terrain, TruthSample};

pub const SENSOR_HEADER: [&str; 11] = ["t", "gx", "gy", "gz", "ax", "ay", "az", "gnss_valid", "vn", "ve", "vd"];
pub const ESTIMATE_HEADER: [&str; 16] = [
    "t", "bgx_dps", "bgy_dps", "bgz_dps", "bax_m_s2", "bay_m_s2", "baz_m_s2", "roll_deg", "pitch_deg", "yaw_deg",
    "wpx_dps", "wpy_dps", "wpz_dps", "wzb_dps", "lyapunov", "frozen",
];

/// Formats `x` as a plain decimal rounded to 9 significant digits, with
/// trailing zeros removed. Negative zero prints as `0`.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if exp > 8 {
        let mantissa = &sci[..sci.find('e').expect("exponent")];
        return mantissa.replace('.', "") + &"0".repeat((exp - 8) as usize);
    }
    let decimals = (8 - exp) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn rad_to_deg3(v: &Vec3) -> [f64; 3] {
    [v.x.to_degrees(), v.y.to_degrees(), v.z.to_degrees()]
}

fn deg_to_rad3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0].to_radians(), v[1].to_radians(), v[2].to_radians())
}

fn join(fields: impl IntoIterator<Item = String>) -> String {
    fields.into_iter().collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------- scenario

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g_m_s2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_yaw_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<RatesFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terrain: Option<TerrainFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_biases: Option<BiasFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    injected_biases: Option<BiasFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<SegmentFile>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    gnss_outages: Vec<OutageFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesFile {
    imu_hz: Option<u32>,
    gnss_hz: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainFile {
    roll_amp_deg: Option<f64>,
    pitch_amp_deg: Option<f64>,
    period_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    gyro_density_rad_s_rthz: Option<f64>,
    accel_density_m_s2_rthz: Option<f64>,
    gnss_vel_sigma_m_s: Option<f64>,
    gnss_vel_corr_time_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BiasFile {
    #[serde(default)]
    gyro_dps: [f64; 3],
    #[serde(default)]
    accel_m_s2: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    duration_s: f64,
    speed_m_s: f64,
    /// Zero or absent for a straight.
    #[serde(default, skip_serializing_if = "is_zero")]
    turn_rate_dps: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutageFile {
    start_s: f64,
    duration_s: f64,
}

impl BiasFile {
    fn to_set(&self) -> BiasSet {
        BiasSet::new(deg_to_rad3(self.gyro_dps), Vec3::from(self.accel_m_s2))
    }

    fn from_set(b: &BiasSet) -> Self {
        Self {
            gyro_dps: rad_to_deg3(&b.b_g),
            accel_m_s2: [b.b_a.x, b.b_a.y, b.b_a.z],
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a scenario file; absent keys take the default scenario's values.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, field) = match e.span() {
            Some(span) => {
                let line = line_of(text, span.start);
                let src = text.lines().nth(line - 1).unwrap_or("");
                let key = src.split('=').next().unwrap_or("").trim().trim_matches(['[', ']']);
                (line, key.to_string())
            }
            None => (0, String::new()),
        };
        Error::Schema {
            line,
            field,
            reason: e.message().trim().to_string(),
        }
    })?;
    let d = ScenarioConfig::default();
    let mut cfg = ScenarioConfig {
        seed: file.seed.unwrap_or(d.seed),
        g: file.g_m_s2.unwrap_or(d.g),
        initial_yaw: file.initial_yaw_deg.map_or(d.initial_yaw, f64::to_radians),
        ..d.clone()
    };
    if let Some(r) = file.rates {
        cfg.rates = Rates {
            imu_hz: r.imu_hz.unwrap_or(d.rates.imu_hz),
            gnss_hz: r.gnss_hz.unwrap_or(d.rates.gnss_hz),
        };
    }
    if let Some(t) = file.terrain {
        cfg.terrain = Terrain {
            roll_amp: t.roll_amp_deg.map_or(d.terrain.roll_amp, f64::to_radians),
            pitch_amp: t.pitch_amp_deg.map_or(d.terrain.pitch_amp, f64::to_radians),
            period: t.period_s.unwrap_or(d.terrain.period),
        };
    }
    if let Some(n) = file.noise {
        cfg.noise = NoiseConfig {
            gyro_density: n.gyro_density_rad_s_rthz.unwrap_or(d.noise.gyro_density),
            accel_density: n.accel_density_m_s2_rthz.unwrap_or(d.noise.accel_density),
            gnss_vel_sigma: n.gnss_vel_sigma_m_s.unwrap_or(d.noise.gnss_vel_sigma),
            gnss_vel_corr_time: n.gnss_vel_corr_time_s.unwrap_or(d.noise.gnss_vel_corr_time),
        };
    }
    if let Some(b) = file.true_biases {
        cfg.true_biases = b.to_set();
    }
    if let Some(b) = file.injected_biases {
        cfg.injected_biases = b.to_set();
    }
    if let Some(segs) = file.segments {
        cfg.segments = segs
            .iter()
            .map(|s| {
                if s.turn_rate_dps == 0.0 {
                    Segment::straight(s.duration_s, s.speed_m_s)
                } else {
                    Segment::arc(s.duration_s, s.speed_m_s, s.turn_rate_dps.to_radians())
                }
            })
            .collect();
    }
    cfg.gnss_outages = file
        .gnss_outages
        .iter()
        .map(|o| GnssOutage {
            start: o.start_s,
            duration: o.duration_s,
        })
        .collect();
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every field of `cfg` in the scenario file format.
pub fn scenario_to_toml(cfg: &ScenarioConfig) -> String {
    let file = ScenarioFile {
        seed: Some(cfg.seed),
        g_m_s2: Some(cfg.g),
        initial_yaw_deg: Some(cfg.initial_yaw.to_degrees()),
        rates: Some(RatesFile {
            imu_hz: Some(cfg.rates.imu_hz),
            gnss_hz: Some(cfg.rates.gnss_hz),
        }),
        terrain: Some(TerrainFile {
            roll_amp_deg: Some(cfg.terrain.roll_amp.to_degrees()),
            pitch_amp_deg: Some(cfg.terrain.pitch_amp.to_degrees()),
            period_s: Some(cfg.terrain.period),
        }),
        noise: Some(NoiseFile {
            gyro_density_rad_s_rthz: Some(cfg.noise.gyro_density),
            accel_density_m_s2_rthz: Some(cfg.noise.accel_density),
            gnss_vel_sigma_m_s: Some(cfg.noise.gnss_vel_sigma),
            gnss_vel_corr_time_s: Some(cfg.noise.gnss_vel_corr_time),
        }),
        true_biases: Some(BiasFile::from_set(&cfg.true_biases)),
        injected_biases: Some(BiasFile::from_set(&cfg.injected_biases)),
        segments: Some(
            cfg.segments
                .iter()
                .map(|s| SegmentFile {
                    duration_s: s.duration,
                    speed_m_s: s.speed,
                    turn_rate_dps: s.turn_rate().to_degrees(),
                })
                .collect(),
        ),
        gnss_outages: cfg
            .gnss_outages
            .iter()
            .map(|o| OutageFile {
                start_s: o.start,
                duration_s: o.duration,
            })
            .collect(),
    };
    toml::to_string(&file).expect("scenario serializes")
}

// ---------------------------------------------------------------- sensors

fn sensor_row(r: &SensorRecord) -> String {
    let mut f: Vec<String> = [r.t, r.gyro.x, r.gyro.y, r.gyro.z, r.accel.x, r.accel.y, r.accel.z]
        .into_iter()
        .map(fmt_sig9)
        .collect();
    match r.gnss_v {
        Some(v) => {
            f.push("1".into());
            f.extend(v.iter().map(|&x| fmt_sig9(x)));
        }
        None => f.extend(["0", "", "", ""].map(String::from)),
    }
    join(f)
}

pub fn write_sensors(mut w: impl Write, records: &[SensorRecord]) -> Result<()> {
    writeln!(w, "{}", SENSOR_HEADER.join(","))?;
    for r in records {
        writeln!(w, "{}", sensor_row(r))?;
    }
    w.flush()?;
    Ok(())
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().collect();
    if got != expected {
        return Err(Error::Schema {
            line: 1,
            field: "header".into(),
            reason: format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_num(rec: &csv::StringRecord, idx: usize, names: &[&str], line: usize) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("");
    let schema = |reason: String| Error::Schema {
        line,
        field: names[idx].to_string(),
        reason,
    };
    let v: f64 = raw.parse().map_err(|_| schema(format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(schema(format!("`{raw}` is not finite")));
    }
    Ok(v)
}

fn csv_reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(r)
}

fn line_number(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

pub fn read_sensors(r: impl Read) -> Result<Vec<SensorRecord>> {
    let mut rdr = csv_reader(r);
    check_header(rdr.headers()?, &SENSOR_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_number(&rec);
        let n = |i| parse_num(&rec, i, &SENSOR_HEADER, line);
        let gyro = Vec3::new(n(1)?, n(2)?, n(3)?);
        let accel = Vec3::new(n(4)?, n(5)?, n(6)?);
        let gnss_v = match rec.get(7).unwrap_or("") {
            "1" => Some(Vec3::new(n(8)?, n(9)?, n(10)?)),
            "0" => {
                if let Some(i) = (8..11).find(|&i| !rec[i].is_empty()) {
                    return Err(Error::Schema {
                        line,
                        field: SENSOR_HEADER[i].into(),
                        reason: "must be empty when gnss_valid is 0".into(),
                    });
                }
                None
            }
            other => {
                return Err(Error::Schema {
                    line,
                    field: "gnss_valid".into(),
                    reason: format!("expected 0 or 1, found `{other}`"),
                })
            }
        };
        let t = n(0)?;
        if let Some(prev) = out.last().map(|p: &SensorRecord| p.t) {
            if !(t > prev) {
                return Err(Error::Schema {
                    line,
                    field: "t".into(),
                    reason: format!("timestamps must increase ({t} after {prev})"),
                });
            }
        }
        out.push(SensorRecord { t, gyro, accel, gnss_v });
    }
    Ok(out)
}

/// Adds constant biases to the gyro and accelerometer columns of a sensor
/// log. Columns whose shift is zero, and every other byte, are copied as is.
pub fn inject_text(input: &str, b_g: &Vec3, b_a: &Vec3) -> Result<String> {
    // Validate the whole log first so bad input cannot be half-rewritten.
    read_sensors(input.as_bytes())?;
    let shifts = [b_g.x, b_g.y, b_g.z, b_a.x, b_a.y, b_a.z];
    let mut out = String::with_capacity(input.len() + input.len() / 8);
    for (i, line) in input.split_inclusive('\n').enumerate() {
        if i == 0 || line.trim_end_matches(['\r', '\n']).is_empty() {
            out.push_str(line);
            continue;
        }
        let body = line.trim_end_matches(['\r', '\n']);
        let ending = &line[body.len()..];
        let mut fields: Vec<String> = body.split(',').map(str::to_string).collect();
        for (k, &s) in shifts.iter().enumerate() {
            if s != 0.0 {
                let v: f64 = fields[k + 1].parse().expect("validated above");
                fields[k + 1] = fmt_sig9(v + s);
            }
        }
        out.push_str(&fields.join(","));
        out.push_str(ending);
    }
    Ok(out)
}

// ---------------------------------------------------------------- truth

pub const TRUTH_HEADER: &str =
    "t,north_m,east_m,vn,ve,vd,an,ae,ad,roll_rad,pitch_rad,yaw_rad,wx,wy,wz,fx,fy,fz";

pub fn write_truth(mut w: impl Write, truth: &[TruthSample]) -> Result<()> {
    writeln!(w, "{TRUTH_HEADER}")?;
    for s in truth {
        let vals = [s.t, s.pos_ne[0], s.pos_ne[1]]
            .into_iter()
            .chain(s.v_n.iter().copied())
            .chain(s.a_n.iter().copied())
            .chain([s.roll, s.pitch, s.yaw])
            .chain(s.omega_b.iter().copied())
            .chain(s.f_b.iter().copied());
        writeln!(w, "{}", join(vals.map(fmt_sig9)))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- estimates

/// One row per output epoch; `lyapunov` (same length as `outputs`) fills the
/// column of that name when the true biases are known.
pub fn write_estimates(mut w: impl Write, outputs: &[EpochOutput], lyapunov: Option<&[(f64, f64)]>) -> Result<()> {
    writeln!(w, "{}", ESTIMATE_HEADER.join(","))?;
    for (i, o) in outputs.iter().enumerate() {
        let mut f: Vec<String> = std::iter::once(o.t)
            .chain(rad_to_deg3(&o.bias.b_g_hat))
            .chain(o.bias.b_a_hat.iter().copied())
            .chain([o.roll.to_degrees(), o.pitch.to_degrees(), o.yaw.to_degrees()])
            .chain(rad_to_deg3(&o.omega_p_b))
            .chain([o.omega_zb.to_degrees()])
            .map(fmt_sig9)
            .collect();
        f.push(lyapunov.map_or(String::new(), |l| fmt_sig9(l[i].1)));
        f.push(if o.frozen { "1" } else { "0" }.into());
        writeln!(w, "{}", join(f))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimates(r: impl Read) -> Result<Vec<EpochOutput>> {
    let names = &ESTIMATE_HEADER;
    let mut rdr = csv_reader(r);
    check_header(rdr.headers()?, names)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_number(&rec);
        let n = |i| parse_num(&rec, i, names, line);
        let frozen = match &rec[15] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Schema {
                    line,
                    field: "frozen".into(),
                    reason: format!("expected 0 or 1, found `{other}`"),
                })
            }
        };
        out.push(EpochOutput {
            t: n(0)?,
            bias: BiasState {
                b_g_hat: deg_to_rad3([n(1)?, n(2)?, n(3)?]),
                b_a_hat: Vec3::new(n(4)?, n(5)?, n(6)?),
            },
            roll: n(7)?.to_radians(),
            pitch: n(8)?.to_radians(),
            yaw: n(9)?.to_radians(),
            omega_p_b: deg_to_rad3([n(10)?, n(11)?, n(12)?]),
            omega_zb: n(13)?.to_radians(),
            frozen,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- reports

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), fmt_sig9)
}

/// Long format: `quantity,axis,value`. Gyro quantities are in deg/s,
/// accelerometer quantities in m/s², lever-arm equivalents in m.
pub fn write_report(mut w: impl Write, report: &RunReport) -> Result<()> {
    writeln!(w, "quantity,axis,value")?;
    let channels: [(&str, &[AxisStats; 3], f64); 2] = [
        ("gyro_dps", &report.gyro, 180.0 / std::f64::consts::PI),
        ("accel_m_s2", &report.accel, 1.0),
    ];
    for (name, stats, scale) in channels {
        for (axis, s) in ["x", "y", "z"].iter().zip(stats) {
            let conv = s.convergence_time;
            let rows = [
                ("converged", Some(if conv.is_some() { 1.0 } else { 0.0 })),
                ("convergence_time_s", conv),
                ("final_estimate", Some(s.final_estimate * scale)),
                ("residual_std", s.residual_std.map(|v| v * scale)),
                ("mean_error", s.mean_error.map(|v| v * scale)),
                ("final_error", s.final_error.map(|v| v * scale)),
            ];
            for (q, v) in rows {
                writeln!(w, "{name}_{q},{axis},{}", opt(v))?;
            }
        }
    }
    let (eg, ea) = report.positioning_equiv.unzip();
    writeln!(w, "positioning_equiv_gyro_m,,{}", opt(eg))?;
    writeln!(w, "positioning_equiv_accel_m,,{}", opt(ea))?;
    writeln!(w, "duration_s,,{}", fmt_sig9(report.duration))?;
    writeln!(w, "imu_gaps,,{}", report.imu_gaps)?;
    writeln!(w, "frozen_epochs,,{}", report.frozen_epochs)?;
    w.flush()?;
    Ok(())
}

/// One row per run (baseline first) plus the overall maxima.
pub fn write_sweep(mut w: impl Write, report: &SweepReport) -> Result<()> {
    let deg = 180.0 / std::f64::consts::PI;
    writeln!(
        w,
        "param,scale,bgx_dps,bgy_dps,bgz_dps,bax_m_s2,bay_m_s2,baz_m_s2,gyro_dev_dps,accel_dev_m_s2"
    )?;
    let est = |e: &[f64; 6]| join((0..6).map(|i| fmt_sig9(if i < 3 { e[i] * deg } else { e[i] })));
    writeln!(w, "baseline,1,{},0,0", est(&report.baseline))?;
    for r in &report.runs {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.param.name(),
            fmt_sig9(r.scale),
            est(&r.estimate),
            fmt_sig9(r.gyro_deviation * deg),
            fmt_sig9(r.accel_deviation)
        )?;
    }
    writeln!(
        w,
        "max,,,,,,,,{},{}",
        fmt_sig9(report.max_gyro_deviation * deg),
        fmt_sig9(report.max_accel_deviation)
    )?;
    w.flush()?;
    Ok(())
}
