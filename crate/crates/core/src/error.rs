use thiserror::Error;

use crate::field::ModeField;
use crate::operator::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient band {requested} exceeds available band {available}")]
    BandMismatch { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("kernel scaling overflow for degree {degree} at radial node {node}")]
    ScalingOverflow { degree: usize, node: usize },

    #[error("GMRES did not reach tolerance after {} iterations (residual {:.3e})", .report.iterations, .report.achieved_tolerance)]
    MaxIterations { best: Box<ModeField>, report: SolveReport },

    #[error("GMRES breakdown after {} iterations (residual {:.3e})", .report.iterations, .report.achieved_tolerance)]
    Breakdown { best: Box<ModeField>, report: SolveReport },

    #[error("band {band} too small for azimuthal order {order}")]
    BandTooSmall { band: usize, order: i64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("singular interface matching for degree {degree} (|det| = {det:.3e})")]
    SingularMatching { degree: usize, det: f64 },

    #[error("radii {0} and {1} are not separated")]
    NonSeparated(f64, f64),

    #[error("moment cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
