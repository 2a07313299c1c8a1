//! Run statistics, error equivalents and the parameter-robustness sweep.

use crate::bias::lyapunov_value;
use crate::error::{Error, Result};
use crate::observer::{run_estimation, EpochOutput, EstimationRun, ObserverConfig};
use crate::sim::{BiasSet, SensorRecord};

/// Convergence band half-width for gyro bias estimates, rad/s.
pub const GYRO_BAND: f64 = 0.02 * std::f64::consts::PI / 180.0;
/// Convergence band half-width for accelerometer bias estimates, m/s².
pub const ACCEL_BAND: f64 = 0.02;
/// An estimate whose in-band tail is shorter than this fraction of the run is
/// reported as non-converged.
pub const MIN_HELD_FRACTION: f64 = 0.1;

/// Lever-arm position error caused by residual biases: `(h·b̃_g·τ, h·b̃_a/g)`.
pub fn positioning_error_equiv(h: f64, b_g_resid: f64, tau: f64, b_a_resid: f64, g: f64) -> Result<(f64, f64)> {
    check_lever(h)?;
    Ok((h * b_g_resid * tau, h * b_a_resid / g))
}

/// Cross-track offset of a point at height `h` over a slope of roll `phi`.
pub fn slope_error_equiv(h: f64, phi: f64) -> Result<f64> {
    check_lever(h)?;
    Ok(h * phi.sin())
}

/// Roll error produced by an uncompensated accelerometer bias, rad.
pub fn bias_tilt_equiv(b_a: f64, g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::param("g", "must be > 0"));
    }
    Ok(b_a / g)
}

fn check_lever(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::param("h", format!("must be > 0, got {h}")))
    }
}

/// Statistics of one bias component over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStats {
    /// Start of the tail that stays inside the band around the final value;
    /// `None` when that tail is too short.
    pub convergence_time: Option<f64>,
    pub final_estimate: f64,
    /// Standard deviation over the converged tail.
    pub residual_std: Option<f64>,
    /// Mean of `estimate − truth` over the converged tail.
    pub mean_error: Option<f64>,
    pub final_error: Option<f64>,
}

impl AxisStats {
    fn from_series(t: &[f64], x: &[f64], band: f64, truth: Option<f64>) -> Self {
        let n = x.len();
        let final_estimate = x[n - 1];
        let mut start = n - 1;
        while start > 0 && (x[start - 1] - final_estimate).abs() <= band {
            start -= 1;
        }
        let span = t[n - 1] - t[0];
        let held = t[n - 1] - t[start];
        let converged = n == 1 || start == 0 || held >= MIN_HELD_FRACTION * span;
        let (convergence_time, residual_std, mean_error) = if converged {
            let tail = &x[start..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
            (Some(t[start]), Some(var.sqrt()), truth.map(|b| mean - b))
        } else {
            (None, None, None)
        };
        Self {
            convergence_time,
            final_estimate,
            residual_std,
            mean_error,
            final_error: truth.map(|b| final_estimate - b),
        }
    }

    pub fn converged(&self) -> bool {
        self.convergence_time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub duration: f64,
    pub gyro: [AxisStats; 3],
    pub accel: [AxisStats; 3],
    pub imu_gaps: usize,
    /// Output epochs with corrections frozen after the loop first closed.
    pub frozen_epochs: usize,
    /// Lever-arm errors from the worst residual std of the estimated axes, m.
    pub positioning_equiv: Option<(f64, f64)>,
    /// `(t, V)` when the true biases are known.
    pub lyapunov: Option<Vec<(f64, f64)>>,
}

impl RunReport {
    /// `truth` is the total bias the sensors carry; `h` the lever arm, m.
    pub fn from_run(run: &EstimationRun, truth: Option<&BiasSet>, h: f64) -> Result<Self> {
        let outs = &run.outputs;
        if outs.is_empty() {
            return Err(Error::param("sensors", "log too short to produce any estimate"));
        }
        let t: Vec<f64> = outs.iter().map(|o| o.t).collect();
        let axis = |f: &dyn Fn(&EpochOutput) -> f64, band, truth: Option<f64>| {
            let x: Vec<f64> = outs.iter().map(f).collect();
            AxisStats::from_series(&t, &x, band, truth)
        };
        let gyro = [0, 1, 2].map(|i| axis(&|o| o.bias.b_g_hat[i], GYRO_BAND, truth.map(|b| b.b_g[i])));
        let accel = [0, 1, 2].map(|i| axis(&|o| o.bias.b_a_hat[i], ACCEL_BAND, truth.map(|b| b.b_a[i])));

        let cfg = &run.config;
        let worst = |stats: &[AxisStats; 3], mask: [bool; 3]| -> Option<f64> {
            let mut m = 0.0f64;
            for (s, on) in stats.iter().zip(mask) {
                if on {
                    m = m.max(s.residual_std?);
                }
            }
            Some(m)
        };
        let positioning_equiv = match (
            worst(&gyro, cfg.bias.gyro_axes.as_array()),
            worst(&accel, cfg.bias.accel_axes.as_array()),
        ) {
            (Some(bg), Some(ba)) => Some(positioning_error_equiv(h, bg, cfg.attitude.tau, ba, cfg.bias.g)?),
            _ => None,
        };
        let lyapunov = truth.map(|b| {
            outs.iter()
                .map(|o| (o.t, epoch_lyapunov(o, b, cfg)))
                .collect()
        });
        Ok(Self {
            duration: t[t.len() - 1] - t[0],
            gyro,
            accel,
            imu_gaps: run.gaps.imu_gaps,
            frozen_epochs: outs.iter().skip_while(|o| o.frozen).filter(|o| o.frozen).count(),
            positioning_equiv,
            lyapunov,
        })
    }
}

/// Closed-loop energy of one output epoch given the true biases.
pub fn epoch_lyapunov(out: &EpochOutput, truth: &BiasSet, cfg: &ObserverConfig) -> f64 {
    lyapunov_value(
        &out.omega_p_b,
        &(truth.b_g - out.bias.b_g_hat),
        &(truth.b_a - out.bias.b_a_hat),
        cfg.attitude.tau,
        cfg.bias.tau_g,
        cfg.bias.omega_a,
        cfg.bias.g,
    )
}

/// Which observer constant a sweep run perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Tau,
    TauG,
    OmegaA,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Tau => "tau",
            SweepParam::TauG => "tau_g",
            SweepParam::OmegaA => "omega_a",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRun {
    pub param: SweepParam,
    pub scale: f64,
    /// Converged `[b_g; b_a]`.
    pub estimate: [f64; 6],
    pub gyro_deviation: f64,
    pub accel_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub perturbation: f64,
    /// Start of the averaging window shared by all runs, s.
    pub window_start: f64,
    pub baseline: [f64; 6],
    pub runs: Vec<SweepRun>,
    /// Largest gyro deviation from baseline over estimated axes, rad/s.
    pub max_gyro_deviation: f64,
    /// Largest accelerometer deviation from baseline, m/s².
    pub max_accel_deviation: f64,
}

/// Reruns the estimator with each constant scaled by `1 ± perturbation` and
/// compares the converged estimates against the unperturbed run.
pub fn sweep(records: &[SensorRecord], cfg: &ObserverConfig, perturbation: f64) -> Result<SweepReport> {
    if !(0.0..=0.5).contains(&perturbation) {
        return Err(Error::param("perturbation", format!("must lie in [0, 0.5], got {perturbation}")));
    }
    let mut cases = vec![(None, 1.0)];
    for p in [SweepParam::Tau, SweepParam::TauG, SweepParam::OmegaA] {
        for s in [1.0 + perturbation, 1.0 - perturbation] {
            cases.push((Some(p), s));
        }
    }
    let configs: Vec<ObserverConfig> = cases
        .iter()
        .map(|&(p, s)| {
            let mut c = *cfg;
            match p {
                Some(SweepParam::Tau) => c.attitude.tau *= s,
                Some(SweepParam::TauG) => c.bias.tau_g *= s,
                Some(SweepParam::OmegaA) => c.bias.omega_a *= s,
                None => {}
            }
            c
        })
        .collect();
    let runs: Vec<Result<EstimationRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_estimation(records, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("estimation thread panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    if runs[0].outputs.is_empty() {
        return Err(Error::param("sensors", "log too short to produce any estimate"));
    }

    let gyro_mask = cfg.bias.gyro_axes.as_array();
    let accel_mask = cfg.bias.accel_axes.as_array();
    let t_first = runs[0].outputs[0].t;
    let t_last = runs[0].outputs[runs[0].outputs.len() - 1].t;
    let latest_allowed = t_last - MIN_HELD_FRACTION * (t_last - t_first);
    let mut window_start = t_first;
    for run in &runs {
        let report = RunReport::from_run(run, None, 1.0)?;
        for i in 0..3 {
            for (stats, on) in [(&report.gyro[i], gyro_mask[i]), (&report.accel[i], accel_mask[i])] {
                if on {
                    window_start = window_start.max(stats.convergence_time.unwrap_or(latest_allowed));
                }
            }
        }
    }
    let window_start = window_start.min(latest_allowed);

    let converged = |run: &EstimationRun| -> [f64; 6] {
        let tail: Vec<&EpochOutput> = run.outputs.iter().filter(|o| o.t >= window_start).collect();
        let mut acc = [0.0; 6];
        for o in &tail {
            for i in 0..3 {
                acc[i] += o.bias.b_g_hat[i];
                acc[i + 3] += o.bias.b_a_hat[i];
            }
        }
        acc.map(|v| v / tail.len() as f64)
    };
    let baseline = converged(&runs[0]);
    let mut out = Vec::with_capacity(6);
    let (mut max_g, mut max_a) = (0.0f64, 0.0f64);
    for (run, &(param, scale)) in runs.iter().zip(&cases).skip(1) {
        let estimate = converged(run);
        let dev = |mask: [bool; 3], off: usize| {
            (0..3)
                .filter(|&k| mask[k])
                .map(|k| (estimate[k + off] - baseline[k + off]).abs())
                .fold(0.0f64, f64::max)
        };
        let gyro_deviation = dev(gyro_mask, 0);
        let accel_deviation = dev(accel_mask, 3);
        max_g = max_g.max(gyro_deviation);
        max_a = max_a.max(accel_deviation);
        out.push(SweepRun {
            param: param.expect("perturbed case"),
            scale,
            estimate,
            gyro_deviation,
            accel_deviation,
        });
    }
    Ok(SweepReport {
        perturbation,
        window_start,
        baseline,
        runs: out,
        max_gyro_deviation: max_g,
        max_accel_deviation: max_a,
    })
}
