use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{Population, ProbabilityVector};

/// How first-order probabilities are generated for each population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PiScheme {
    /// `π_k = n / N`.
    Uniform,
    /// `π_k ∝ 1 + (k mod 10) / 10`, capped at 1.
    SizeCycle,
}

/// How the variable of interest is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YScheme {
    /// `y_k = 0.5 + 0.4 sin(k)`, bounded in `[0.1, 0.9]`.
    Bounded,
    /// `y_k = c π_k`.
    ProportionalToPi(f64),
}

/// Nested populations `U_1 ⊂ U_2 ⊂ …`: population `t` holds units
/// `1..=sizes[t]`, and unit `k` keeps the same `y_k` in every population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSequence {
    pub sizes: Vec<usize>,
    /// Expected sampling fraction `n_t / N_t`.
    pub fraction: f64,
    pub pi: PiScheme,
    pub y: YScheme,
}

impl PopulationSequence {
    /// `N_t = base · 2^t` for `t = 0..points`, with the default generators.
    pub fn geometric(base: usize, points: usize, fraction: f64) -> Self {
        Self {
            sizes: (0..points).map(|t| base << t).collect(),
            fraction,
            pi: PiScheme::SizeCycle,
            y: YScheme::Bounded,
        }
    }

    pub fn with_pi(mut self, pi: PiScheme) -> Self {
        self.pi = pi;
        self
    }

    pub fn with_y(mut self, y: YScheme) -> Self {
        self.y = y;
        self
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn expected_size(&self, t: usize) -> f64 {
        self.fraction * self.sizes[t] as f64
    }

    pub fn is_nested(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] < w[1])
    }

    /// The population and probabilities at index `t`.
    pub fn point(&self, t: usize) -> Result<(Population, ProbabilityVector)> {
        let size = *self
            .sizes
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("sequence index {t} out of range")))?;
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling fraction {} must lie in (0, 1]",
                self.fraction
            )));
        }
        let n = self.expected_size(t);
        let pv = match self.pi {
            PiScheme::Uniform => ProbabilityVector::new(vec![n / size as f64; size])?,
            PiScheme::SizeCycle => {
                let sizes: Vec<f64> = (1..=size).map(|k| 1.0 + (k % 10) as f64 / 10.0).collect();
                ProbabilityVector::proportional(&sizes, n)?
            }
        };
        let y = match self.y {
            YScheme::Bounded => (1..=size).map(|k| 0.5 + 0.4 * (k as f64).sin()).collect(),
            YScheme::ProportionalToPi(c) => pv.as_slice().iter().map(|p| c * p).collect(),
        };
        Ok((Population::from_values(y)?, pv))
    }
}
