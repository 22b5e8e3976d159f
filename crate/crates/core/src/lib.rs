//! Unequal-probability sampling designs, Horvitz-Thompson estimation and
//! empirical checks of mean-square consistency conditions.
//!
//! The crate is organized bottom-up:
//!
//! - [`population`]: populations, probability vectors, sample counts.
//! - [`rng`]: seeded, stream-addressable random numbers.
//! - [`linalg`]: kernel vectors of small dense constraint matrices.
//! - [`designs`]: Poisson, multinomial, SRS, pivotal and fast cube sampling.
//! - [`estimators`]: point estimator, exact variances and variance bounds.
//! - [`oracle`]: exact enumeration and Monte Carlo inclusion/moment estimates.
//! - [`verify`]: condition checkers, martingale diagnostics, rate experiments.

pub mod designs;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod numeric;
pub mod oracle;
pub mod population;
pub mod rng;
pub mod verify;

pub use designs::{Design, MartingaleTrace, Sampler, StepRecord, Tolerances};
pub use error::{Error, Result};
pub use oracle::{InclusionMatrix, MomentReport};
pub use population::{total, validate_inputs, Frame, Population, ProbabilityVector, SampleCounts};
pub use rng::RandomStream;
