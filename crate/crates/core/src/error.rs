use thiserror::Error;

/// Errors raised by the analytic, numerical, simulation and coding routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("formula undefined for d=1; use the single-queue tail instead")]
    UndefinedForSingleCopy,

    #[error("lambda = {lambda} is not in the stable regime (requires lambda < 1)")]
    Unstable { lambda: f64 },

    #[error("n + m = {total} exceeds the supported maximum of {max}")]
    TooManyCopies { total: u32, max: u32 },

    #[error("integration failed at t = {t} (step {step}): q = {q}")]
    Integration { step: f64, t: f64, q: f64 },

    #[error("invalid tail curve: {0}")]
    InvalidCurve(String),

    #[error("invalid window [{start}, {end}]: {reason}")]
    InvalidWindow { start: f64, end: f64, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("event queue overflow: {pending} pending events at t = {t}")]
    EventOverflow { pending: usize, t: f64 },

    #[error("codec: {0}")]
    Codec(String),

    #[error("unrecoverable batch: only {rank} independent coded jobs out of {needed} needed")]
    Unrecoverable { rank: usize, needed: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
