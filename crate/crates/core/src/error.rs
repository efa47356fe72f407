use crate::expr::ParseError;
use crate::kernel::Regime;
use crate::monotone::IterationTrace;

/// Errors raised by the solver modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid boundary configuration: {0}")]
    InvalidBoundary(String),

    #[error("the shift k = 0 is excluded")]
    ZeroShift,

    #[error("k = {k} is outside the admissible range of a shifted operator (k < 0 or 0 < k <= pi^2/4)")]
    ShiftOutOfRange { k: f64 },

    #[error("regime mismatch: expected {expected:?}, got k = {k}")]
    RegimeMismatch { expected: Regime, k: f64 },

    #[error("degenerate kernel normalization D = {value:e} at k = {k}")]
    DegenerateNormalization { k: f64, value: f64 },

    #[error("point (x = {x}, s = {s}) lies outside [0, 1]^2")]
    OutOfDomain { x: f64, s: f64 },

    #[error("grid: {0}")]
    Grid(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular linear system (pivot at row {pivot})")]
    Singular { pivot: usize },

    #[error("newton stagnated after {iterations} iterations (residual {residual:e})")]
    NewtonStagnation { iterations: usize, residual: f64 },

    #[error("newton iterate left the inflated bracket at iteration {iteration}")]
    NewtonEscaped { iteration: usize },

    #[error("iteration diverged at step {step}: sup|u| = {sup:e} exceeds {limit:e}")]
    Diverged { step: usize, sup: f64, limit: f64, trace: Box<IterationTrace> },

    #[error("empty k range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-integrable Nagumo majorant: {0}")]
    NonIntegrable(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line front end: 1 for input or
    /// validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidBoundary(_)
            | Error::ZeroShift
            | Error::ShiftOutOfRange { .. }
            | Error::RegimeMismatch { .. }
            | Error::OutOfDomain { .. }
            | Error::Grid(_)
            | Error::EmptyRange { .. }
            | Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_) => 1,
            Error::DegenerateNormalization { .. }
            | Error::NonFinite(_)
            | Error::Singular { .. }
            | Error::NewtonStagnation { .. }
            | Error::NewtonEscaped { .. }
            | Error::Diverged { .. }
            | Error::NonIntegrable(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
