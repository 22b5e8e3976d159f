//! The generic martingale update shared by the pivotal and cube methods.

use super::trace::{snap, Branch, StepRecord};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Direction components at or below this magnitude are treated as zero.
pub const DIRECTION_TOL: f64 = 1e-12;

/// Largest `λ₁`, `λ₂` keeping `π + λ₁ u` and `π − λ₂ u` inside `[0, 1]`.
pub fn lambda_bounds(pi_current: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    if pi_current.len() != u.len() {
        return Err(Error::LengthMismatch {
            what: "direction",
            expected: pi_current.len(),
            found: u.len(),
        });
    }
    if let Some(&value) = pi_current.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::NotFractional { value });
    }
    let mut l1 = f64::INFINITY;
    let mut l2 = f64::INFINITY;
    for (&p, &d) in pi_current.iter().zip(u) {
        if d > DIRECTION_TOL {
            l1 = l1.min((1.0 - p) / d);
            l2 = l2.min(p / d);
        } else if d < -DIRECTION_TOL {
            l1 = l1.min(-p / d);
            l2 = l2.min((p - 1.0) / d);
        }
    }
    if !l1.is_finite() || !l2.is_finite() {
        return Err(Error::ZeroDirection);
    }
    Ok((l1, l2))
}

/// Current state of a martingale run.
pub(crate) struct MartingaleState {
    pub pi: Vec<f64>,
    pub snap: f64,
    pub steps: Option<Vec<StepRecord>>,
}

impl MartingaleState {
    pub fn new(pi: &[f64], snap: f64, traced: bool) -> Self {
        Self {
            pi: pi.to_vec(),
            snap,
            steps: traced.then(Vec::new),
        }
    }

    /// Applies one random innovation along `direction` on `units`.
    /// Components of `direction` that are numerically zero are dropped.
    pub fn step(&mut self, units: &[usize], direction: &[f64], rng: &mut RandomStream) -> Result<()> {
        let (units, u): (Vec<usize>, Vec<f64>) = units
            .iter()
            .zip(direction)
            .filter(|(_, d)| d.abs() > DIRECTION_TOL)
            .map(|(k, d)| (*k, *d))
            .unzip();
        let before: Vec<f64> = units.iter().map(|&k| self.pi[k]).collect();
        let (l1, l2) = lambda_bounds(&before, &u)?;
        let plus_prob = l2 / (l1 + l2);
        let branch = if rng.uniform() < plus_prob {
            Branch::Plus
        } else {
            Branch::Minus
        };
        let scale = match branch {
            Branch::Plus => l1,
            Branch::Minus => -l2,
        };
        for (j, &k) in units.iter().enumerate() {
            self.pi[k] = snap(before[j] + scale * u[j], self.snap);
        }
        if let Some(steps) = self.steps.as_mut() {
            let delta = units
                .iter()
                .zip(&before)
                .map(|(&k, b)| self.pi[k] - b)
                .collect();
            let branch_prob = match branch {
                Branch::Plus => plus_prob,
                Branch::Minus => l1 / (l1 + l2),
            };
            steps.push(StepRecord {
                units,
                pi_before: before,
                direction: u,
                lambda1: l1,
                lambda2: l2,
                branch,
                branch_prob,
                delta,
            });
        }
        Ok(())
    }
}
