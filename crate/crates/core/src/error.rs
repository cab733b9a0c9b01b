use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: endpoints must be finite with lo <= hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("empty set has no hull")]
    EmptySet,

    #[error("square image needs a nonnegative set, found lower endpoint {0}")]
    NegativeDomain(f64),

    #[error("pole of period-two curve")]
    PeriodTwoPole,

    #[error("removable singularity at E = {0}; use limit mode")]
    RemovableSingularity(f64),

    #[error("log-derivative pole: {0}")]
    LogDerivativePole(&'static str),

    #[error("sampling density too low near {at}: crossing parity mismatch, use a denser grid")]
    SamplingDensity { at: f64 },

    #[error("too many gaps for exhaustive thickness ({found} > {max})")]
    TooManyGaps { found: usize, max: usize },

    #[error("degenerate scale range [{lo}, {hi}] with {n} scales")]
    DegenerateScales { lo: f64, hi: f64, n: usize },

    #[error("trim {0} exceeds half window")]
    TrimTooLarge(f64),

    #[error("no gap-free tail found below {e_safe}; last gap is [{gap_lo}, {gap_hi}]")]
    NoGapFreeTail { e_safe: f64, gap_lo: f64, gap_hi: f64 },

    #[error("finite-level approximant missed the low band; increase k")]
    MissedLowBand,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
