use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angle at the origin is undefined for a point at the origin")]
    OriginAngle,

    #[error("arc endpoints are antipodal; the spherical geodesic between them is not unique")]
    AntipodalEndpoints,

    #[error("region has no finite enclosing ball")]
    UnboundedRegion,

    #[error("expected point count {expected:.3e} exceeds the sampling cap {cap}")]
    CountCapExceeded { expected: f64, cap: u64 },

    #[error("degenerate input: points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("crossing at level {0} does not belong to this tree's level set")]
    NotACrossing(f64),

    #[error("level {level} is censored (allowed: <= horizon {horizon} - margin {margin})")]
    Censored {
        level: f64,
        horizon: f64,
        margin: f64,
    },

    #[error(
        "covering verification failed at r={level}, d={d}: sampled direction {dir:?} uncovered"
    )]
    UncoveredDirection { level: f64, d: usize, dir: Vec<f64> },

    #[error("operation only defined for d=1 (got d={0})")]
    NotPlanarDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
