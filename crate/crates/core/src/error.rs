use thiserror::Error;

/// Errors raised by schedule construction, bound evaluation and the tuning procedures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid horizon {0}: must be at least 1")]
    InvalidHorizon(usize),

    #[error("invalid cooldown fraction {0}: must lie in (0, 1]")]
    InvalidFraction(f64),

    #[error("invalid cosine cycle length {0}: must lie in (0, 1]")]
    InvalidCycle(f64),

    #[error("invalid exponent {0}: must be positive")]
    InvalidExponent(f64),

    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule value at t={t} is {value}; schedules must be positive and finite")]
    InvalidScheduleValue { t: usize, value: f64 },

    #[error("infeasible extension: long cooldown starts at {long_start}, short cooldown at {short_start}")]
    InfeasibleExtension { short_start: usize, long_start: usize },

    #[error("horizon {t} out of range 1..={horizon}")]
    HorizonOutOfRange { t: usize, horizon: usize },

    #[error("invalid cooldown start T0={cooldown_start} for T={horizon}: closed form needs 1 <= T0 and T - T0 >= 2")]
    InvalidCooldown { horizon: usize, cooldown_start: usize },

    #[error("empty grid")]
    EmptyGrid,

    #[error("rank-deficient least-squares problem: {0}")]
    RankDeficient(String),

    #[error("fitted model has no interior minimizer: {0}")]
    NonPhysicalFit(String),

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("cannot parse schedule spec `{spec}`: {reason}")]
    ScheduleSpec { spec: String, reason: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}
