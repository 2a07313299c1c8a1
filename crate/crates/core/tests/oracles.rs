//! Nonlinear implementation against the linearized model and independent
//! numerical references.

use geobias_core::bias::{lyapunov_rate, steady_state_accel, AxesMask};
use geobias_core::errormodel::{closed_loop_linear_sim, dynamics_eigenvalues, dynamics_matrix, stationary_control_rate};
use geobias_core::math::skew;
use geobias_core::observer::{run_with, Observer};
use geobias_core::sim::{simulate, BiasSet, NoiseConfig, Segment};
use geobias_core::{LinErrorState, LinearParams, Mat3, ObserverConfig, ScenarioConfig, Vec3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

#[test]
fn eigenvalues_match_general_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let tau = rng.random_range(0.5..20.0);
        let wz = rng.random_range(-1.0..1.0);
        let m: Mat3 = dynamics_matrix(tau, &Vec3::new(0.0, 0.0, wz));
        let numeric = sorted(m.complex_eigenvalues().iter().copied().collect());
        let closed = sorted(dynamics_eigenvalues(tau, wz).to_vec());
        for (a, b) in numeric.iter().zip(&closed) {
            assert!((a - b).norm() < 1e-12, "tau {tau} wz {wz}: {a} vs {b}");
        }
    }
}

#[test]
fn lyapunov_rate_is_minus_squared_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut v = |r: f64| Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r));
    for _ in 0..1000 {
        let (w, wb) = (v(0.01), v(1.0));
        let tau = 0.5 + 19.5 * (wb.x + 1.0) / 2.0;
        assert!((lyapunov_rate(&w, &wb, tau) + w.norm_squared()).abs() <= 1e-15);
    }
}

#[test]
fn skew_quadratic_form_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let a = Vec3::new(rng.random(), rng.random(), rng.random());
        let b = Vec3::new(rng.random(), rng.random(), rng.random());
        assert!(b.dot(&(skew(&a) * b)).abs() < 1e-15);
    }
}

#[test]
fn stationary_solution_inverts_steady_state_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let b_a = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.0);
        let tau = rng.random_range(1.0..10.0);
        let wz = rng.random_range(0.03..0.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let w = stationary_control_rate(&Vec3::zeros(), &b_a, wz, tau, 9.8).unwrap();
        let back = steady_state_accel(&w, wz, tau, 9.8).unwrap();
        assert!((back - b_a).amax() < 1e-9, "{back:?} vs {b_a:?}");
    }
}

/// 60 s on, 20 s off turning at ±15 deg/s.
fn turn_profile(t: f64) -> f64 {
    let phase = t % 160.0;
    let rate = 15f64.to_radians();
    if (60.0..80.0).contains(&phase) {
        rate
    } else if (140.0..160.0).contains(&phase) {
        -rate
    } else {
        0.0
    }
}

#[test]
fn linear_closed_loop_energy_never_increases() {
    let params = LinearParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut v = |r: f64| Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), 0.0);
    for _ in 0..50 {
        let init = LinErrorState::consistent(v(0.01), v(0.5f64.to_radians()), v(0.2), &params).unwrap();
        let run = closed_loop_linear_sim(&init, turn_profile, &params, 0.04, 6000.0).unwrap();
        let mut prev = f64::INFINITY;
        for s in &run {
            let e = s.state.lyapunov(&params);
            assert!(e <= prev + 1e-12);
            prev = e;
        }
        assert!(run.last().unwrap().state.norm() < 1e-6 * init.norm());
    }
}

/// Relative RMS difference of the control rate between the nonlinear
/// observer and the linear model over 60 s of a curve at `turn_dps`.
fn linear_vs_nonlinear(turn_dps: f64) -> f64 {
    let b_g = Vec3::new(0.05f64.to_radians(), -0.03f64.to_radians(), 0.0);
    let b_a = Vec3::new(0.02, -0.01, 0.0);
    let scenario = ScenarioConfig {
        segments: vec![
            Segment::straight(15.0, 5.0),
            Segment::arc(30.0, 5.0, turn_dps.to_radians()),
            Segment::straight(16.0, 5.0),
        ],
        noise: NoiseConfig::NONE,
        injected_biases: BiasSet::new(b_g, b_a),
        ..ScenarioConfig::default()
    };
    let (truth, sensors) = simulate(&scenario).unwrap();
    let cfg = ObserverConfig {
        output_decimation: 1,
        ..ObserverConfig::default()
    };
    let run = run_with(Observer::with_attitude(cfg, truth[0].dcm()).unwrap(), &sensors).unwrap();
    // start the linear model from the observer state once the loop closes
    let first = run.outputs.iter().position(|o| !o.frozen).unwrap();
    let o0 = run.outputs[first];
    let start = (o0.t * 100.0).round() as usize;
    let init = LinErrorState::new(Vec3::zeros(), o0.omega_p_b, b_g - o0.bias.b_g_hat, b_a - o0.bias.b_a_hat).unwrap();
    let params = LinearParams::default();
    let wz = |t: f64| truth[(start + (t * 100.0).floor() as usize).min(truth.len() - 1)].omega_b.z;
    let lin = closed_loop_linear_sim(&init, wz, &params, 0.01, 60.0).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (o, l) in run.outputs[first..].iter().zip(&lin) {
        num += (o.omega_p_b - l.state.omega_p_b).norm_squared();
        den += l.state.omega_p_b.norm_squared();
    }
    (num / den).sqrt()
}

#[test]
fn nonlinear_observer_follows_linear_model_on_gentle_curve() {
    let err = linear_vs_nonlinear(3.0);
    assert!(err < 0.05, "relative rms {err}");
}

#[test]
fn linear_model_degrades_with_turn_rate() {
    // the model holds the accelerometer residual constant while it is being
    // estimated, an approximation that worsens as ω_zb/ω_a grows
    let gentle = linear_vs_nonlinear(3.0);
    let sharp = linear_vs_nonlinear(15.0);
    assert!(sharp > gentle);
    assert!(sharp < 0.2, "{sharp}");
}

#[test]
fn steady_turn_recovers_accelerometer_bias() {
    let b_a = Vec3::new(0.1, -0.05, 0.0);
    let scenario = ScenarioConfig {
        segments: vec![Segment::arc(120.0, 5.0, 15f64.to_radians())],
        noise: NoiseConfig::NONE,
        injected_biases: BiasSet::new(Vec3::zeros(), b_a),
        ..ScenarioConfig::default()
    };
    let (truth, sensors) = simulate(&scenario).unwrap();
    let mut cfg = ObserverConfig {
        output_decimation: 1,
        ..ObserverConfig::default()
    };
    cfg.bias.gyro_axes = AxesMask::NONE;
    cfg.bias.accel_axes = AxesMask::NONE;
    let run = run_with(Observer::with_attitude(cfg, truth[0].dcm()).unwrap(), &sensors).unwrap();
    let tail: Vec<_> = run.outputs.iter().filter(|o| o.t >= 60.0).collect();
    let n = tail.len() as f64;
    let w = tail.iter().fold(Vec3::zeros(), |a, o| a + o.omega_p_b) / n;
    let wz = tail.iter().map(|o| o.omega_zb).sum::<f64>() / n;
    let est = steady_state_accel(&w, wz, cfg.attitude.tau, cfg.attitude.g).unwrap();
    for i in 0..2 {
        assert!((est[i] - b_a[i]).abs() < 0.1 * b_a[i].abs(), "{est:?}");
    }
}
