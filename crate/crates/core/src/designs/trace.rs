use serde::{Deserialize, Serialize};

use crate::population::SampleCounts;

/// Which of the two innovations a martingale step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `δ = λ₁* u`
    Plus,
    /// `δ = −λ₂* u`
    Minus,
}

/// One step of a martingale sampling run, restricted to the affected units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Affected units in ascending index order.
    pub units: Vec<usize>,
    /// `π(i)` on `units`, before the step.
    pub pi_before: Vec<f64>,
    /// Direction `u(i)` on `units`.
    pub direction: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub branch: Branch,
    /// Probability of the branch that was taken.
    pub branch_prob: f64,
    /// Realized innovation `δ(i)` on `units`, after snapping.
    pub delta: Vec<f64>,
}

impl StepRecord {
    /// `λ₂*/(λ₁*+λ₂*)`, the probability of the `+λ₁* u` branch.
    pub fn plus_probability(&self) -> f64 {
        self.lambda2 / (self.lambda1 + self.lambda2)
    }

    /// `λ₁*/(λ₁*+λ₂*)`, the probability of the `−λ₂* u` branch.
    pub fn minus_probability(&self) -> f64 {
        self.lambda1 / (self.lambda1 + self.lambda2)
    }

    /// Expected innovation scale `λ₁* p₊ − λ₂* p₋`, zero up to rounding.
    pub fn expected_innovation(&self) -> f64 {
        self.lambda1 * self.plus_probability() - self.lambda2 * self.minus_probability()
    }
}

/// Full record of a martingale sampling run from `π(0)` to `π(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrace {
    pub initial: Vec<f64>,
    pub terminal: Vec<f64>,
    pub steps: Vec<StepRecord>,
    /// Number of steps.
    #[serde(rename = "T")]
    pub t: usize,
    /// Largest number of units affected by a single step.
    #[serde(rename = "C")]
    pub c: usize,
    pub snap_tolerance: f64,
}

impl MartingaleTrace {
    pub(crate) fn new(initial: Vec<f64>, terminal: Vec<f64>, steps: Vec<StepRecord>, snap: f64) -> Self {
        let c = steps.iter().map(|s| s.units.len()).max().unwrap_or(0);
        Self {
            t: steps.len(),
            c,
            initial,
            terminal,
            steps,
            snap_tolerance: snap,
        }
    }

    /// Rebuilds every intermediate vector `π(0), …, π(T)` from the innovations.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut pi = self.initial.clone();
        out.push(pi.clone());
        for s in &self.steps {
            for (j, &k) in s.units.iter().enumerate() {
                pi[k] = s.pi_before[j] + s.delta[j];
            }
            out.push(pi.clone());
        }
        out
    }

    /// Replays the recorded branch decisions from `π(0)` and returns the
    /// resulting terminal vector.
    pub fn replay(&self) -> Vec<f64> {
        let mut pi = self.initial.clone();
        for s in &self.steps {
            let scale = match s.branch {
                Branch::Plus => s.lambda1,
                Branch::Minus => -s.lambda2,
            };
            for (j, &k) in s.units.iter().enumerate() {
                pi[k] = snap(pi[k] + scale * s.direction[j], self.snap_tolerance);
            }
        }
        pi
    }

    /// Selection indicators obtained by rounding `π(T)`.
    pub fn counts(&self) -> SampleCounts {
        indicators(&self.terminal)
    }
}

/// Snaps a coordinate to 0 or 1 when within `tol`, clamping overshoot.
#[inline]
pub(crate) fn snap(value: f64, tol: f64) -> f64 {
    if value <= tol {
        0.0
    } else if value >= 1.0 - tol {
        1.0
    } else {
        value
    }
}

#[inline]
pub(crate) fn is_fractional(value: f64, tol: f64) -> bool {
    value > tol && value < 1.0 - tol
}

pub(crate) fn indicators(pi: &[f64]) -> SampleCounts {
    SampleCounts(pi.iter().map(|&p| if p >= 0.5 { 1 } else { 0 }).collect())
}
