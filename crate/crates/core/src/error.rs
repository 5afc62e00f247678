use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("odd grid size: {0} points per axis (must be even and >= 8)")]
    OddGridSize(usize),
    #[error("grid too small: {0} points per axis (must be >= 8)")]
    GridTooSmall(usize),
    #[error("unsupported dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDim(usize),
    #[error("half length must be positive and finite, got {0}")]
    BadHalfLength(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("dense oracle limited to 4096 points, grid has {0}")]
    OversizedGrid(usize),
    #[error("dilation xi = {xi} exceeds the allowed range |xi| <= {xi_max}")]
    DilationRange { xi: f64, xi_max: f64 },
    #[error("decay guard violated: mass fraction {fraction:.3e} outside |x|_inf > L/2 (tolerance {tolerance:.1e})")]
    DecayGuard { fraction: f64, tolerance: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("fiber degenerated")]
    FiberDegenerated,
    #[error("optimizer did not converge after {iterations} iterations (last value {last_value:.6e})")]
    NotConverged { iterations: usize, last_value: f64 },
    #[error("solver report is not converged")]
    Unconverged,
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
