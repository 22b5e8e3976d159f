//! Ground truth for the designs: exact enumeration of small sampling
//! distributions, closed-form inclusion probabilities and Monte Carlo
//! estimation for the martingale designs.

mod enumerate;
mod inclusion;
mod montecarlo;

pub use enumerate::{distribution_moments, enumerate_distribution, Outcome, MAX_OUTCOMES, MAX_POISSON_UNITS};
pub use inclusion::{exact_inclusion, InclusionMatrix};
pub use montecarlo::{
    map_replicate_chunks, mc_estimates, mc_inclusion, mc_moments, summarize_estimates, McConfig, MomentReport,
    CHUNK_SIZE, MIN_REPLICATES,
};
