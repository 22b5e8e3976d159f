//! Sampling designs.
//!
//! Poisson, multinomial and simple random sampling draw independently or
//! exchangeably. Pivotal and fast cube sampling are martingale algorithms
//! and can record a [`MartingaleTrace`] of every step.

mod cube;
mod martingale;
mod pivotal;
mod simple;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::population::{validate_inputs, Population, ProbabilityVector, SampleCounts};
use crate::rng::RandomStream;

pub use cube::{fast_cube_sample, with_size_constraint};
pub use martingale::{lambda_bounds, DIRECTION_TOL};
pub use pivotal::pivotal_sample;
pub use simple::{multinomial_sample, poisson_sample, srswor_sample};
pub use trace::{Branch, MartingaleTrace, StepRecord};

/// Default snapping tolerance for martingale coordinates.
pub const DEFAULT_SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Poisson,
    Multinomial,
    Srswor,
    Pivotal,
    Cube,
}

impl Design {
    pub const ALL: [Design; 5] = [
        Design::Poisson,
        Design::Multinomial,
        Design::Srswor,
        Design::Pivotal,
        Design::Cube,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Design::Poisson => "poisson",
            Design::Multinomial => "multinomial",
            Design::Srswor => "srswor",
            Design::Pivotal => "pivotal",
            Design::Cube => "cube",
        }
    }

    pub fn is_without_replacement(self) -> bool {
        !matches!(self, Design::Multinomial)
    }

    /// Whether the design is run as a martingale algorithm with a trace.
    pub fn is_martingale(self) -> bool {
        matches!(self, Design::Pivotal | Design::Cube)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownDesign(s.to_string()))
    }
}

/// Numerical tolerances of the martingale designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Coordinates within `snap` of 0 or 1 are snapped and frozen.
    pub snap: f64,
    /// Rank threshold for kernel computation, relative to the largest column norm.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            snap: DEFAULT_SNAP_TOL,
            rank: DEFAULT_RANK_TOL,
        }
    }
}

/// A design together with its tolerances; draws one sample per call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub design: Design,
    pub tolerances: Tolerances,
}

impl Sampler {
    pub fn new(design: Design) -> Self {
        Self {
            design,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    /// Checks that the inputs suit the design, without drawing.
    pub fn check(&self, pop: &Population, pv: &ProbabilityVector) -> Result<()> {
        validate_inputs(pop, pv)?;
        match self.design {
            Design::Multinomial => pv.integral_n().map(|_| ()),
            Design::Srswor => {
                let n = pv.integral_n()?;
                if !pv.is_uniform() {
                    return Err(Error::NonUniformProbabilities);
                }
                if n == 0 {
                    return Err(Error::InvalidSize { population: pv.len(), n });
                }
                Ok(())
            }
            Design::Cube if pop.q() == 0 => Err(Error::MissingAuxiliaries),
            _ => Ok(()),
        }
    }

    /// Draws one sample.
    pub fn draw(&self, pop: &Population, pv: &ProbabilityVector, rng: &mut RandomStream) -> Result<SampleCounts> {
        self.draw_inner(pop, pv, rng, false).map(|(c, _)| c)
    }

    /// Draws one sample, returning the trace for martingale designs.
    pub fn draw_traced(
        &self,
        pop: &Population,
        pv: &ProbabilityVector,
        rng: &mut RandomStream,
    ) -> Result<(SampleCounts, Option<MartingaleTrace>)> {
        self.draw_inner(pop, pv, rng, true)
    }

    fn draw_inner(
        &self,
        pop: &Population,
        pv: &ProbabilityVector,
        rng: &mut RandomStream,
        traced: bool,
    ) -> Result<(SampleCounts, Option<MartingaleTrace>)> {
        validate_inputs(pop, pv)?;
        match self.design {
            Design::Poisson => Ok((poisson_sample(pv, rng), None)),
            Design::Multinomial => Ok((multinomial_sample(pv, rng)?, None)),
            Design::Srswor => {
                if !pv.is_uniform() {
                    return Err(Error::NonUniformProbabilities);
                }
                Ok((srswor_sample(pv.len(), pv.integral_n()?, rng)?, None))
            }
            Design::Pivotal => pivotal::run(pv, rng, &self.tolerances, traced),
            Design::Cube => cube::run(pop, pv, rng, &self.tolerances, traced),
        }
    }
}
