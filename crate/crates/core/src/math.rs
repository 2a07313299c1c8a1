//! Fixed-size vector/matrix primitives and direction cosine matrix handling.
//!
//! [`Vec3`] and [`Mat3`] are plain `nalgebra` types; [`Dcm`] wraps a [`Mat3`]
//! and only ever holds a proper rotation (orthonormal, determinant +1).

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Per-entry tolerance on `C·Cᵀ = I` and `det C = 1` accepted by [`Dcm`].
pub const DCM_TOLERANCE: f64 = 1e-9;

const ORTHONORMAL_TOLERANCE: f64 = 1e-12;
const MAX_ORTHONORMAL_ITERATIONS: usize = 64;
const GIMBAL_GUARD: f64 = 1e-3;

/// Skew-symmetric (cross-product) matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub(crate) fn ensure_finite_vec(v: &Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn orthogonality_error(m: &Mat3) -> f64 {
    max_abs(&(m.transpose() * m - Mat3::identity()))
}

/// Direction cosine matrix from body axes to platform (navigation) axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dcm(Mat3);

impl Dcm {
    pub fn identity() -> Self {
        Dcm(Mat3::identity())
    }

    /// Accepts `m` only if it already satisfies the rotation invariants.
    pub fn try_from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("dcm"));
        }
        if orthogonality_error(&m) > DCM_TOLERANCE || (m.determinant() - 1.0).abs() > DCM_TOLERANCE {
            return Err(Error::DegenerateMatrix);
        }
        Ok(Dcm(m))
    }

    /// Aerospace z-y-x sequence: `C = Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sy, cy) = yaw.sin_cos();
        Dcm(Mat3::new(
            cy * cp,
            cy * sp * sr - sy * cr,
            cy * sp * cr + sy * sr,
            sy * cp,
            sy * sp * sr + cy * cr,
            sy * sp * cr - cy * sr,
            -sp,
            cp * sr,
            cp * cr,
        ))
    }

    /// Rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0 && angle.is_finite()) {
            return Err(Error::param("axis", "must be finite and nonzero"));
        }
        let k = skew(&(axis / n));
        Ok(Dcm(Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())))
    }

    /// Returns `(roll, pitch, yaw)` in the convention of [`Dcm::from_euler`].
    pub fn to_euler(&self) -> Result<(f64, f64, f64)> {
        euler_from_dcm(self)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Dcm {
        Dcm(self.0.transpose())
    }

    /// Yaw angle, well defined away from gimbal lock.
    pub fn yaw(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }
}

impl Mul<Vec3> for Dcm {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Dcm {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul for Dcm {
    type Output = Dcm;

    fn mul(self, rhs: Dcm) -> Dcm {
        Dcm(self.0 * rhs.0)
    }
}

/// Nearest rotation to `m`, by repeated symmetric renormalization
/// `M ← M·(3I − MᵀM)/2` until `MᵀM = I` to 1e-12.
pub fn orthonormalize(m: &Mat3) -> Result<Dcm> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let gram_err = (m.transpose() * m - Mat3::identity()).norm();
    if gram_err >= 0.5 || m.determinant() <= 0.0 {
        return Err(Error::DegenerateMatrix);
    }
    let mut x = *m;
    for _ in 0..MAX_ORTHONORMAL_ITERATIONS {
        if orthogonality_error(&x) <= ORTHONORMAL_TOLERANCE {
            return Ok(Dcm(x));
        }
        x = x * (Mat3::identity() * 3.0 - x.transpose() * x) * 0.5;
    }
    Err(Error::DegenerateMatrix)
}

/// One Euler step of `Ċ = C·skew(ω_b) − skew(ω_p)·C`, then orthonormalized.
///
/// `omega_b` is the body rate (body axes), `omega_p` the platform control rate
/// (platform axes). Keep `dt·|ω|` well below 0.1 rad.
pub fn dcm_step(c: &Dcm, omega_b: &Vec3, omega_p: &Vec3, dt: f64) -> Result<Dcm> {
    ensure_finite_vec(omega_b, "body rate")?;
    ensure_finite_vec(omega_p, "platform rate")?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    let cm = c.matrix();
    let rate = cm * skew(omega_b) - skew(omega_p) * cm;
    orthonormalize(&(cm + rate * dt))
}

/// Roll, pitch and yaw (z-y-x convention). Fails within 1e-3 rad of ±90° pitch.
pub fn euler_from_dcm(c: &Dcm) -> Result<(f64, f64, f64)> {
    let m = c.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    if pitch.abs() >= std::f64::consts::FRAC_PI_2 - GIMBAL_GUARD {
        return Err(Error::GimbalLock { pitch_rad: pitch });
    }
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    Ok((roll, pitch, yaw))
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}
