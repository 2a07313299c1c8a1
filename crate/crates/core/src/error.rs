use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("matrix is too far from a rotation to orthonormalize")]
    DegenerateMatrix,

    #[error("pitch {pitch_rad} rad is within the gimbal-lock guard")]
    GimbalLock { pitch_rad: f64 },

    #[error("turn rate {omega_zb} rad/s is below the steady-state guard {omega_min} rad/s")]
    SingularTurnRate { omega_zb: f64, omega_min: f64 },

    #[error("line {line}, field `{field}`: {reason}")]
    Schema {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used by the command line tool.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "non_finite",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DegenerateMatrix => "degenerate_matrix",
            Error::GimbalLock { .. } => "gimbal_lock",
            Error::SingularTurnRate { .. } => "singular_turn_rate",
            Error::Schema { .. } => "schema",
            Error::Scenario(_) => "scenario",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}
