use thiserror::Error;

/// Errors raised by the numerical library.
///
/// Variants split into two families: invalid input (`Invalid*`, `Degenerate*`, ...)
/// and numerical failure during a computation. The CLI maps the former to exit
/// code 1 and the latter to exit code 2 via [`SqhaError::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqhaError {
    #[error("empty domain: q_max ({q_max}) must exceed q_min ({q_min})")]
    EmptyDomain { q_min: f64, q_max: f64 },

    #[error("grid needs at least 8 points, got {0}")]
    TooFewPoints(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("derivative order must be 1 or 2, got {0}")]
    InvalidOrder(u8),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("grid too narrow: span ±{required:.6e} m around the centre is required, grid offers ±{available:.6e} m")]
    GridTooNarrow { required: f64, available: f64 },

    #[error("under-resolved kernel: grid spacing {spacing:.6e} m must be below lambda_c/2 = {limit:.6e} m")]
    UnderResolvedKernel { spacing: f64, limit: f64 },

    #[error("tail window holds {0} usable points, at least 8 are required")]
    ShortTailWindow(usize),

    #[error("lambda_q undefined at this lambda_c: {0}")]
    LambdaQUndefined(String),

    #[error("unclassifiable tail: {0}")]
    UnclassifiableTail(String),

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("CFL violation: dt = {dt:.6e} s exceeds the bound {limit:.6e} s")]
    CflViolation { dt: f64, limit: f64 },

    #[error("step rejected at t = {time:.6e} s: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
}

impl SqhaError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        SqhaError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that arise while computing, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SqhaError::LambdaQUndefined(_)
                | SqhaError::UnclassifiableTail(_)
                | SqhaError::NoBoundState(_)
                | SqhaError::RootFinding(_)
                | SqhaError::CflViolation { .. }
                | SqhaError::StepRejected { .. }
                | SqhaError::ShortTailWindow(_)
                | SqhaError::UnderResolvedKernel { .. }
                | SqhaError::GridTooNarrow { .. }
                | SqhaError::NonFinite(_)
                | SqhaError::DegenerateDensity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SqhaError>;
