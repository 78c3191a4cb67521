use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("singular denominator {value:e} (noise level {noise:e})")]
    SingularDenominator { value: f64, noise: f64 },
    #[error("no positive Nehari scaling: nonlinear part {0:e} is not positive")]
    NoNehariRoot(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("blow-up suspected at t = {time}")]
    BlowUpSuspected { time: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("tolerance {tol:e} not met after {intervals} subintervals (error estimate {estimate:e})")]
    ToleranceNotMet {
        tol: f64,
        intervals: usize,
        estimate: f64,
    },
    #[error("integrand tail decays like |x|^-{exponent:.4}, not integrable")]
    NonIntegrableTail { exponent: f64 },
    #[error("integrand tail is not in its power-law regime")]
    IrregularTail,
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
    #[error("{0} quadrature cannot integrate this field")]
    MethodMismatch(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
