//! Monte Carlo estimation of inclusion probabilities and estimator moments.
//!
//! Replicate `r` always draws from stream `(seed, r)`. Replicates are grouped
//! in fixed-size chunks whose results are merged in chunk order, so the
//! number of worker threads never changes the output.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InclusionMatrix;
use crate::designs::Sampler;
use crate::error::{Error, Result};
use crate::estimators::ht_total;
use crate::numeric::CompensatedSum;
use crate::population::{Population, ProbabilityVector};
use crate::rng::RandomStream;

/// Smallest number of replicates accepted by the Monte Carlo routines.
pub const MIN_REPLICATES: usize = 1_000;

/// Replicates per work item.
pub const CHUNK_SIZE: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads.max(1));
        self
    }

    pub fn require_at_least(&self, minimum: usize) -> Result<()> {
        if self.replicates < minimum {
            return Err(Error::TooFewReplicates {
                replicates: self.replicates,
                minimum,
            });
        }
        Ok(())
    }

    pub fn stream(&self, replicate: u64) -> RandomStream {
        RandomStream::new(self.seed, replicate)
    }

    fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        match self.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .expect("thread pool construction")
                .install(op),
            None => op(),
        }
    }
}

/// Runs `f` on consecutive replicate ranges of [`CHUNK_SIZE`] and returns the
/// results in replicate order.
pub fn map_replicate_chunks<T, F>(config: &McConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    let r = config.replicates as u64;
    let chunks: Vec<Range<u64>> = (0..r)
        .step_by(CHUNK_SIZE as usize)
        .map(|s| s..(s + CHUNK_SIZE).min(r))
        .collect();
    config.install(|| chunks.into_par_iter().map(&f).collect())
}

#[derive(Clone)]
struct PairCounts {
    first: Vec<u64>,
    first_sq: Vec<u64>,
    joint: Vec<u64>,
    joint_sq: Vec<u64>,
}

impl PairCounts {
    fn new(len: usize) -> Self {
        Self {
            first: vec![0; len],
            first_sq: vec![0; len],
            joint: vec![0; len * len],
            joint_sq: vec![0; len * len],
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in [
            (&mut self.first, &other.first),
            (&mut self.first_sq, &other.first_sq),
            (&mut self.joint, &other.joint),
            (&mut self.joint_sq, &other.joint_sq),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Monte Carlo first- and second-order inclusion probabilities.
///
/// For with-replacement designs the entries estimate `E[I_k]` and `E[I_k I_l]`,
/// with standard errors from the sample second moments; otherwise the binomial
/// standard error `sqrt(p(1−p)/R)` is reported.
pub fn mc_inclusion(
    sampler: &Sampler,
    pop: &Population,
    pv: &ProbabilityVector,
    config: &McConfig,
) -> Result<InclusionMatrix> {
    config.require_at_least(MIN_REPLICATES)?;
    sampler.check(pop, pv)?;
    let len = pv.len();
    let partial = map_replicate_chunks(config, |range| {
        let mut acc = PairCounts::new(len);
        let mut selected: Vec<(usize, u64)> = Vec::with_capacity(len);
        for r in range {
            let counts = sampler.draw(pop, pv, &mut config.stream(r))?;
            selected.clear();
            selected.extend(counts.selected().map(|k| (k, counts.0[k] as u64)));
            for (i, &(k, ck)) in selected.iter().enumerate() {
                acc.first[k] += ck;
                acc.first_sq[k] += ck * ck;
                for &(l, cl) in &selected[i + 1..] {
                    acc.joint[k * len + l] += ck * cl;
                    acc.joint_sq[k * len + l] += (ck * cl) * (ck * cl);
                }
            }
        }
        Ok(acc)
    })?;
    let mut total = PairCounts::new(len);
    for p in &partial {
        total.merge(p);
    }

    let reps = config.replicates as f64;
    let with_replacement = !sampler.design.is_without_replacement();
    let se = |sum: u64, sum_sq: u64| {
        let mean = sum as f64 / reps;
        if with_replacement {
            let var = (sum_sq as f64 / reps - mean * mean).max(0.0) * reps / (reps - 1.0);
            (var / reps).sqrt()
        } else {
            (mean * (1.0 - mean) / reps).max(0.0).sqrt()
        }
    };
    let first: Vec<f64> = total.first.iter().map(|&s| s as f64 / reps).collect();
    let mut joint = vec![vec![0.0; len]; len];
    let mut errors = vec![vec![0.0; len]; len];
    for k in 0..len {
        joint[k][k] = first[k];
        errors[k][k] = se(total.first[k], total.first_sq[k]);
        for l in k + 1..len {
            let idx = k * len + l;
            let p = total.joint[idx] as f64 / reps;
            let e = se(total.joint[idx], total.joint_sq[idx]);
            joint[k][l] = p;
            joint[l][k] = p;
            errors[k][l] = e;
            errors[l][k] = e;
        }
    }
    Ok(InclusionMatrix::from_estimates(
        first,
        joint,
        errors,
        config.replicates,
        with_replacement,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub total: f64,
    pub mean_estimate: f64,
    /// Dispersion of the estimates around their mean, divisor `R`.
    pub variance_estimate: f64,
    /// Mean squared deviation from the true total; equals
    /// `variance_estimate + (mean_estimate − total)²`.
    pub mse: f64,
    pub replicates: usize,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_mse: f64,
}

/// Estimates computed on `config.replicates` independent samples, in replicate order.
pub fn mc_estimates(
    sampler: &Sampler,
    pop: &Population,
    pv: &ProbabilityVector,
    config: &McConfig,
) -> Result<Vec<f64>> {
    sampler.check(pop, pv)?;
    let chunks = map_replicate_chunks(config, |range| {
        range
            .map(|r| {
                let counts = sampler.draw(pop, pv, &mut config.stream(r))?;
                Ok(ht_total(pop.y(), pv.as_slice(), counts.as_slice()))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(chunks.concat())
}

/// Summarizes a sequence of estimates against the true total.
pub fn summarize_estimates(estimates: &[f64], total: f64) -> MomentReport {
    let reps = estimates.len() as f64;
    let mean = estimates.iter().copied().collect::<CompensatedSum>().value() / reps;
    let mut m2 = CompensatedSum::new();
    let mut m4 = CompensatedSum::new();
    let mut e2 = CompensatedSum::new();
    let mut e4 = CompensatedSum::new();
    for &t in estimates {
        let d = t - mean;
        m2.add(d * d);
        m4.add(d.powi(4));
        let e = t - total;
        e2.add(e * e);
        e4.add(e.powi(4));
    }
    let variance = m2.value() / reps;
    let mse = e2.value() / reps;
    MomentReport {
        total,
        mean_estimate: mean,
        variance_estimate: variance,
        mse,
        replicates: estimates.len(),
        se_mean: (variance / reps).sqrt(),
        se_variance: ((m4.value() / reps - variance * variance).max(0.0) / reps).sqrt(),
        se_mse: ((e4.value() / reps - mse * mse).max(0.0) / reps).sqrt(),
    }
}

/// Monte Carlo mean, variance and mean squared error of the HT estimator.
pub fn mc_moments(
    sampler: &Sampler,
    pop: &Population,
    pv: &ProbabilityVector,
    config: &McConfig,
) -> Result<MomentReport> {
    config.require_at_least(MIN_REPLICATES)?;
    let estimates = mc_estimates(sampler, pop, pv, config)?;
    Ok(summarize_estimates(&estimates, pop.total()))
}
