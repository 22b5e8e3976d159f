//! Checkers for the conditions under which the HT estimator is consistent
//! in mean square, diagnostics for martingale designs, and the empirical
//! consistency-rate experiment.

mod conditions;
mod martingale;
mod rate;
mod report;
mod sequence;

pub use conditions::{check_h1_h3, check_h4, check_h4b, check_h4c, check_syg, Thresholds, H4C_MIN_REPLICATES};
pub use martingale::{
    check_innovation_decomposition, check_martingale, InnovationAccumulator, MartingaleSummary,
    INNOVATION_MIN_TRACES,
};
pub use rate::{rate_experiment, RateOptions, RatePoint, RateReport, VarianceSource};
pub use report::{ConditionId, ConditionReport, EvidenceMode, Verdict, Witness};
pub use sequence::{PiScheme, PopulationSequence, YScheme};

/// Width of the Monte Carlo acceptance band, in standard errors.
pub const MC_BAND: f64 = 3.0;
