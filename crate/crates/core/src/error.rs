use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("invalid time {0}: times must be finite and non-negative")]
    InvalidTime(f64),

    /// The radicand of R = sqrt(Adot^2 - A*Addot) is not positive, so the
    /// factorized form of the exact propagator does not exist.
    #[error("R is not positive at t = {t}: Adot^2 - A*Addot = {radicand:e}")]
    RNotPositive { t: f64, radicand: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("state is not physical: det(cov) - hbar^2/4 = {deficit:e}")]
    NonPhysicalState { deficit: f64 },

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("criterion has imaginary residual {imag:e} above tolerance")]
    NonRealCriterion { imag: f64 },

    #[error("Fock dimension {dim} is below the minimum {min}")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("Fock truncation unreliable: population {population:e} in the top levels")]
    TruncationUnreliable { population: f64 },

    #[error("no positivity violation found (min eigenvalue {best_min_eig:e} over squeezing <= {max_squeeze}, t <= {max_time})")]
    NoViolationFound {
        best_min_eig: f64,
        max_squeeze: f64,
        max_time: f64,
    },

    #[error("time {t} exceeds the recurrence horizon {horizon} of the discretized bath")]
    RecurrenceHorizonExceeded { t: f64, horizon: f64 },

    #[error("symplectic matrix has no real logarithm (trace {trace})")]
    NoRealLogarithm { trace: f64 },
}
