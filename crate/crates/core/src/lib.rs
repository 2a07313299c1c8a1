//! Geometric ("virtual platform") attitude observer with a unified gyro and
//! accelerometer bias estimator for GNSS/IMU land vehicles.
//!
//! The crate is split along the data flow of the estimator:
//!
//! - [`math`]: 3-vector/3×3 primitives, the skew operator and DCM integration.
//! - [`attitude`]: the strapdown platform, specific-force mismatch and the
//!   leveling/heading control rates.
//! - [`bias`]: the bias observer driven by the body-frame control rate, its
//!   steady-state solutions and the Lyapunov diagnostics.
//! - [`errormodel`]: the linearized error dynamics, used as an analytical
//!   oracle for the nonlinear implementation.
//! - [`sim`]: kinematic land-vehicle trajectories and sensor corruption.
//! - [`observer`]: the complete estimator over a sensor log (alignment, rate
//!   bridging between IMU and GNSS, gap handling).
//! - [`metrics`]: convergence statistics, error equivalents and the
//!   parameter-robustness sweep.
//! - [`io`]: scenario files and the CSV formats used by the command line tool.
//!
//! Frames: body x forward, y right, z down; navigation frame North-East-Down.
//! All internal angles are radians.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod bias;
pub mod error;
pub mod errormodel;
pub mod io;
pub mod math;
pub mod metrics;
pub mod observer;
pub mod sim;

pub use attitude::{AttitudeParams, AttitudeState, HeadingMode};
pub use bias::{AxesMask, BiasParams, BiasState};
pub use error::{Error, Result};
pub use errormodel::{LinErrorState, LinearParams};
pub use math::{Dcm, Mat3, Vec3};
pub use metrics::{RunReport, SweepReport};
pub use observer::{EpochOutput, EstimationRun, Observer, ObserverConfig};
pub use sim::{ScenarioConfig, SensorRecord, TruthSample};

/// Gravity magnitude used throughout unless configured otherwise, m/s².
pub const DEFAULT_GRAVITY: f64 = 9.8;
