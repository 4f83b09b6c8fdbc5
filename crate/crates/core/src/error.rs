use thiserror::Error;

/// Errors raised by channel, trajectory and generator operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability vector is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("time {t} is outside the sampled range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("propagator undefined on axis {axis}: eigenvalue vanishes at s = {s} but not at t = {t}")]
    IndivisibleAt { axis: usize, s: f64, t: f64 },

    #[error("generator is singular at t = {t} (eigenvalue {value} on axis {axis} is within the zero band)")]
    SingularGenerator { t: f64, axis: usize, value: f64 },

    #[error("rates are not integrable near t = {t}: eigenvalue on axis {axis} would exceed 1")]
    NonIntegrableRates { t: f64, axis: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
