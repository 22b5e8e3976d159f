use thiserror::Error;

/// Errors raised across the sampling library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("probability {value} of unit {unit} is outside (0, 1]")]
    ProbabilityOutOfRange { unit: usize, value: f64 },
    #[error("population must contain at least one unit")]
    EmptyPopulation,
    #[error("duplicate unit id {0:?}")]
    DuplicateId(String),
    #[error("non-finite value in {what} at unit {unit}")]
    NonFinite { what: &'static str, unit: usize },
    #[error("sample size {0} is not an integer")]
    NonIntegerSampleSize(f64),
    #[error("invalid sample size n={n} for population of size N={population}")]
    InvalidSize { population: usize, n: usize },
    #[error("simple random sampling requires equal inclusion probabilities")]
    NonUniformProbabilities,
    #[error("cube method requires at least one auxiliary variable")]
    MissingAuxiliaries,
    #[error("no constraints left to drop")]
    NoConstraintsLeft,
    #[error("direction vector is numerically zero")]
    ZeroDirection,
    #[error("pi component {value} is not strictly inside (0, 1)")]
    NotFractional { value: f64 },
    #[error("variance formula requires exact second-order inclusion probabilities")]
    RequiresExactInclusion,
    #[error("variance formula requires a without-replacement design")]
    RequiresWithoutReplacement,
    #[error("variable of interest has a negative value at unit {unit}")]
    NegativeY { unit: usize },
    #[error("design {0} has no closed-form inclusion probabilities")]
    UnsupportedDesign(String),
    #[error("enumeration of {size} outcomes exceeds the limit of {limit}")]
    TooLarge { size: f64, limit: f64 },
    #[error("{replicates} replicates requested, at least {minimum} required")]
    TooFewReplicates { replicates: usize, minimum: usize },
    #[error("population sequence needs at least {required} points, got {found}")]
    EmptySequence { required: usize, found: usize },
    #[error("rate experiment needs at least 4 points spanning a decade of n: {0}")]
    InsufficientSpan(String),
    #[error("malformed martingale trace at step {step}: {reason}")]
    MalformedTrace { step: usize, reason: String },
    #[error("unknown design {0:?}")]
    UnknownDesign(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
