use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alpha must lie in (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("per-side tail constant must lie in (0, {max}], got {value}")]
    TailConstantOutOfRange { value: f64, max: f64 },
    #[error("probability p must lie in (0,1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("{name} out of range: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("sites must be distinct; ({space}, {time}) appears twice")]
    DuplicateSite { space: i64, time: i64 },
    #[error("slice time {0} is not among the queried sites")]
    UnknownSlice(i64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("quadrature did not converge: estimate {value}, error {error} after {evaluations} evaluations")]
    QuadratureFailed { value: f64, error: f64, evaluations: usize },
    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue} against trace {trace}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, trace: f64 },
    #[error("test function does not decay: relative boundary mass {0}")]
    NonDecayingTestFunction(f64),
    #[error("zero variance in input")]
    ZeroVariance,
    #[error("non-positive value {value} at x = {x} where a logarithm is needed")]
    NonPositive { x: f64, value: f64 },
    #[error("tail bound {bound} cannot be certified below {limit}")]
    Uncertified { bound: f64, limit: f64 },
    #[error("backward cutoff {t_max} left every component a singleton")]
    CutoffFailure { t_max: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument { name, reason: reason.into() }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}
