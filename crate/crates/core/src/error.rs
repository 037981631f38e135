use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("unbound orbit: energy {0} is not negative")]
    UnboundOrbit(f64),

    #[error("no real eccentricity: 2 l^2 |E| = {0} exceeds 1")]
    NoRealEccentricity(f64),

    #[error("invalid squeezing S = {0}: must lie in (0, 2)")]
    InvalidSqueezing(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("expansion window reached n = {n_max} with tail mass {tail_mass:e} above tolerance {tol:e}")]
    Truncation { n_max: i64, tail_mass: f64, tol: f64 },

    #[error("accuracy estimate {estimate:e} exceeds tolerance {tolerance:e}: {what}")]
    Accuracy { what: String, estimate: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::UnboundOrbit(_) => "unbound_orbit",
            Error::NoRealEccentricity(_) => "no_real_eccentricity",
            Error::InvalidSqueezing(_) => "invalid_squeezing",
            Error::Solver { .. } => "solver",
            Error::Truncation { .. } => "truncation",
            Error::Accuracy { .. } => "accuracy",
            Error::Numerical(_) => "numerical",
        }
    }

    /// Process exit status: 1 for bad inputs, 2 for solver-side failures, 3 for accuracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Range(_)
            | Error::UnboundOrbit(_)
            | Error::NoRealEccentricity(_)
            | Error::InvalidSqueezing(_) => 1,
            Error::Solver { .. } | Error::Truncation { .. } | Error::Numerical(_) => 2,
            Error::Accuracy { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
