use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::estimators::ht_total;
use crate::numeric::CompensatedSum;
use crate::population::{validate_inputs, Population, ProbabilityVector, SampleCounts};

pub const MAX_POISSON_UNITS: usize = 20;
pub const MAX_OUTCOMES: f64 = 1e6;

/// One point of the sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub counts: SampleCounts,
    pub probability: f64,
    pub estimate: f64,
}

/// Every sample the design can produce, with its probability and estimate.
pub fn enumerate_distribution(design: Design, pop: &Population, pv: &ProbabilityVector) -> Result<Vec<Outcome>> {
    validate_inputs(pop, pv)?;
    let pi = pv.as_slice();
    let len = pi.len();
    let outcome = |counts: Vec<u32>, probability: f64| Outcome {
        estimate: ht_total(pop.y(), pi, &counts),
        counts: SampleCounts(counts),
        probability,
    };
    match design {
        Design::Poisson => {
            if len > MAX_POISSON_UNITS {
                return Err(Error::TooLarge {
                    size: 2f64.powi(len as i32),
                    limit: 2f64.powi(MAX_POISSON_UNITS as i32),
                });
            }
            Ok((0u32..1 << len)
                .map(|mask| {
                    let counts: Vec<u32> = (0..len).map(|k| (mask >> k) & 1).collect();
                    let p = counts
                        .iter()
                        .zip(pi)
                        .map(|(&c, &p)| if c == 1 { p } else { 1.0 - p })
                        .product();
                    outcome(counts, p)
                })
                .collect())
        }
        Design::Srswor => {
            let n = pv.integral_n()?;
            if !pv.is_uniform() {
                return Err(Error::NonUniformProbabilities);
            }
            let size = binomial(len, n);
            if size > MAX_OUTCOMES {
                return Err(Error::TooLarge {
                    size,
                    limit: MAX_OUTCOMES,
                });
            }
            let p = 1.0 / size;
            let mut out = Vec::with_capacity(size as usize);
            let mut subset: Vec<usize> = (0..n).collect();
            loop {
                let mut counts = vec![0u32; len];
                for &k in &subset {
                    counts[k] = 1;
                }
                out.push(outcome(counts, p));
                if !next_combination(&mut subset, len) {
                    break;
                }
            }
            Ok(out)
        }
        Design::Multinomial => {
            let n = pv.integral_n()?;
            let size = (len as f64).powi(n as i32);
            if size > MAX_OUTCOMES {
                return Err(Error::TooLarge {
                    size,
                    limit: MAX_OUTCOMES,
                });
            }
            let draw: Vec<f64> = pi.iter().map(|p| p / n as f64).collect();
            let mut acc: BTreeMap<Vec<u32>, CompensatedSum> = BTreeMap::new();
            // odometer over ordered draw tuples
            let mut tuple = vec![0usize; n];
            loop {
                let mut counts = vec![0u32; len];
                let mut p = 1.0;
                for &k in &tuple {
                    counts[k] += 1;
                    p *= draw[k];
                }
                acc.entry(counts).or_default().add(p);
                let mut pos = 0;
                while pos < n {
                    tuple[pos] += 1;
                    if tuple[pos] < len {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
            Ok(acc.into_iter().map(|(c, p)| outcome(c, p.value())).collect())
        }
        Design::Pivotal | Design::Cube => Err(Error::UnsupportedDesign(design.to_string())),
    }
}

/// Probability mass, mean and variance of the estimate over an enumerated distribution.
pub fn distribution_moments(outcomes: &[Outcome]) -> (f64, f64, f64) {
    let mass: CompensatedSum = outcomes.iter().map(|o| o.probability).collect();
    let mean: CompensatedSum = outcomes.iter().map(|o| o.probability * o.estimate).collect();
    let mean = mean.value();
    let var: CompensatedSum = outcomes
        .iter()
        .map(|o| o.probability * (o.estimate - mean).powi(2))
        .collect();
    (mass.value(), mean, var.value())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Advances `subset` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
