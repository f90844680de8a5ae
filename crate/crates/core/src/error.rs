use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("user {id} at ({x}, {y}, {z}) lies outside the building")]
    UserOutsideBuilding { id: u32, x: f64, y: f64, z: f64 },

    #[error("UAV at x = {x} is inside the building (facing wall at x = {x_b})")]
    UavInsideBuilding { x: f64, x_b: f64 },

    #[error("UAV and user coincide; link distance is zero")]
    CoincidentPoints,

    #[error("{model} path loss model called with {band} radio parameters")]
    BandMismatch { model: &'static str, band: &'static str },

    #[error("angle {0} deg is outside [0, 90]")]
    AngleOutOfRange(f64),

    #[error("closed-form gradient is singular: {0}")]
    SingularGradient(String),

    #[error("no root of the optimal-angle cubic in (0, 1) for the configured constants")]
    NoCubicRoot,

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("non-finite value during {context}")]
    NonFinite { context: String },

    #[error("roster is not symmetric: user {id} has no mirror image")]
    NotSymmetric { id: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("no feasible plan up to k = {max_k}; worst cluster power {worst_power_w:.3} W exceeds the cap")]
    Infeasible {
        max_k: usize,
        worst_power_w: f64,
        /// Per-UAV power (W) of the last attempted plan.
        profile: Vec<f64>,
    },

    #[error("experiment `{experiment}`: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// Process exit code used by the CLI: 1 invalid input, 2 computation
    /// failure, 3 infeasible plan.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Experiment { source, .. } => source.exit_code(),
            Error::Infeasible { .. } => 3,
            Error::InvalidParameter { .. }
            | Error::UserOutsideBuilding { .. }
            | Error::UavInsideBuilding { .. }
            | Error::BandMismatch { .. }
            | Error::AngleOutOfRange(_)
            | Error::NotSymmetric { .. }
            | Error::Parse { .. }
            | Error::Config { .. }
            | Error::Io(_) => 1,
            Error::CoincidentPoints
            | Error::SingularGradient(_)
            | Error::NoCubicRoot
            | Error::InfeasibleGeometry(_)
            | Error::NonFinite { .. }
            | Error::Csv(_) => 2,
        }
    }
}
