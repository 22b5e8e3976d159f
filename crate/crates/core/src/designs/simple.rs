//! Designs with independent or exchangeable draws.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::population::{ProbabilityVector, SampleCounts};
use crate::rng::RandomStream;

/// Independent Bernoulli trials with success probabilities `π_k`.
pub fn poisson_sample(pv: &ProbabilityVector, rng: &mut RandomStream) -> SampleCounts {
    SampleCounts(
        pv.as_slice()
            .iter()
            .map(|&p| u32::from(rng.bernoulli(p)))
            .collect(),
    )
}

/// `n` independent draws, unit `k` selected with probability `π_k / n` at each draw.
pub fn multinomial_sample(pv: &ProbabilityVector, rng: &mut RandomStream) -> Result<SampleCounts> {
    let n = pv.integral_n()?;
    let mut acc = CompensatedSum::new();
    let cumulative: Vec<f64> = pv
        .as_slice()
        .iter()
        .map(|&p| {
            acc.add(p);
            acc.value()
        })
        .collect();
    let total = *cumulative.last().expect("non-empty probability vector");
    let mut counts = vec![0u32; pv.len()];
    for _ in 0..n {
        let target = rng.uniform() * total;
        let k = cumulative
            .partition_point(|&c| c <= target)
            .min(counts.len() - 1);
        counts[k] += 1;
    }
    Ok(SampleCounts(counts))
}

/// Simple random sampling of `n` out of `population` units without replacement.
pub fn srswor_sample(population: usize, n: usize, rng: &mut RandomStream) -> Result<SampleCounts> {
    if n == 0 || n > population {
        return Err(Error::InvalidSize { population, n });
    }
    let mut order: Vec<usize> = (0..population).collect();
    for i in 0..n {
        let j = rng.index_in(i, population);
        order.swap(i, j);
    }
    let mut counts = vec![0u32; population];
    for &k in &order[..n] {
        counts[k] = 1;
    }
    Ok(SampleCounts(counts))
}
