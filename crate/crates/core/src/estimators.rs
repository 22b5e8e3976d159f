//! The Horvitz-Thompson/Hansen-Hurwitz point estimator, exact design
//! variances and the variance bounds used by the consistency conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::oracle::InclusionMatrix;
use crate::population::{ProbabilityVector, SampleCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    /// `(unit, count · y_k / π_k)` for each selected unit.
    pub weights: Vec<(usize, f64)>,
}

/// `t̂_y = Σ_k (y_k / π_k) I_k`.
pub fn ht_estimate(y: &[f64], pv: &ProbabilityVector, counts: &SampleCounts) -> EstimateResult {
    let weights: Vec<(usize, f64)> = counts
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(k, &c)| (k, c as f64 * y[k] / pv[k]))
        .collect();
    let estimate = numeric::sum(weights.iter().map(|(_, w)| *w));
    EstimateResult { estimate, weights }
}

/// Estimate only, without allocating the weight list.
#[inline]
pub fn ht_total(y: &[f64], pi: &[f64], counts: &[u32]) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 0..counts.len() {
        if counts[k] > 0 {
            acc.add(counts[k] as f64 * y[k] / pi[k]);
        }
    }
    acc.value()
}

fn check_len(y: &[f64], pv: &ProbabilityVector) -> Result<()> {
    if y.len() != pv.len() {
        return Err(Error::LengthMismatch {
            what: "y",
            expected: pv.len(),
            found: y.len(),
        });
    }
    Ok(())
}

fn require_exact(pv: &ProbabilityVector, pkl: &InclusionMatrix) -> Result<()> {
    if !pkl.is_exact() {
        return Err(Error::RequiresExactInclusion);
    }
    if pkl.with_replacement() {
        return Err(Error::RequiresWithoutReplacement);
    }
    if pkl.len() != pv.len() {
        return Err(Error::LengthMismatch {
            what: "inclusion matrix",
            expected: pv.len(),
            found: pkl.len(),
        });
    }
    Ok(())
}

/// Variance of the HT estimator for a without-replacement design:
/// `Σ_k (y_k/π_k)² π_k(1−π_k) + Σ_{k≠l} (y_k/π_k)(y_l/π_l)(π_kl − π_k π_l)`.
pub fn var_ht_exact(pv: &ProbabilityVector, pkl: &InclusionMatrix, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    require_exact(pv, pkl)?;
    let pi = pv.as_slice();
    let mut acc = CompensatedSum::new();
    for k in 0..pi.len() {
        let ck = y[k] / pi[k];
        acc.add(ck * ck * pi[k] * (1.0 - pi[k]));
        for l in k + 1..pi.len() {
            let cl = y[l] / pi[l];
            acc.add(2.0 * ck * cl * (pkl.joint(k, l) - pi[k] * pi[l]));
        }
    }
    Ok(acc.value())
}

/// Variance under Poisson sampling, `Σ_k (y_k/π_k)² π_k(1−π_k)`.
pub fn poisson_variance(pv: &ProbabilityVector, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    Ok(numeric::sum(
        pv.as_slice()
            .iter()
            .zip(y)
            .map(|(&p, &v)| (v / p).powi(2) * p * (1.0 - p)),
    ))
}

/// Hansen-Hurwitz variance under multinomial sampling,
/// `Σ_k π_k (y_k/π_k − t_y/n)²`.
pub fn multinomial_variance(pv: &ProbabilityVector, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    let n = pv.integral_n()? as f64;
    let mean = numeric::sum(y.iter().copied()) / n;
    Ok(numeric::sum(
        pv.as_slice()
            .iter()
            .zip(y)
            .map(|(&p, &v)| p * (v / p - mean).powi(2)),
    ))
}

fn mean_square(y: &[f64]) -> f64 {
    numeric::sum(y.iter().map(|v| v * v)) / y.len() as f64
}

/// `N² (1/(N min π) + max_{k≠l} |π_kl − π_k π_l| / (min π)²) · N⁻¹ Σ y²`.
pub fn bound_prop0(pv: &ProbabilityVector, pkl: &InclusionMatrix, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    require_exact(pv, pkl)?;
    let n_units = pv.len() as f64;
    let min_pi = pv.min();
    let gap = pkl.max_covariance_gap(pv.as_slice()).map_or(0.0, |(g, _, _)| g);
    Ok(n_units * n_units * (1.0 / (n_units * min_pi) + gap / (min_pi * min_pi)) * mean_square(y))
}

/// `N² (1/(N min π) + a/n) · N⁻¹ Σ y²`, valid for non-negative `y` when
/// `π_kl ≤ (1 + a/n) π_k π_l`.
pub fn bound_h4b(pv: &ProbabilityVector, y: &[f64], a: f64) -> Result<f64> {
    check_len(y, pv)?;
    if let Some(unit) = y.iter().position(|v| *v < 0.0) {
        return Err(Error::NegativeY { unit });
    }
    if a.is_nan() || a < 0.0 {
        return Err(Error::InvalidArgument(format!("a must be non-negative, got {a}")));
    }
    let n_units = pv.len() as f64;
    Ok(n_units * n_units * (1.0 / (n_units * pv.min()) + a / pv.n()) * mean_square(y))
}

/// `Σ_k π_k (y_k/π_k)²`, the sharper of the two multinomial-benchmark bounds.
pub fn bound_h4c(pv: &ProbabilityVector, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    Ok(numeric::sum(
        pv.as_slice().iter().zip(y).map(|(&p, &v)| p * (v / p).powi(2)),
    ))
}

/// `N / min π · N⁻¹ Σ y²`, the outer multinomial-benchmark bound.
pub fn bound_h4c_outer(pv: &ProbabilityVector, y: &[f64]) -> Result<f64> {
    check_len(y, pv)?;
    Ok(pv.len() as f64 / pv.min() * mean_square(y))
}

/// `(max |y| / min π)² · C² · E(T)` for a martingale algorithm affecting at
/// most `C` units per step.
pub fn bound_martingale(pv: &ProbabilityVector, y: &[f64], c: usize, expected_t: f64) -> Result<f64> {
    check_len(y, pv)?;
    if c == 0 || expected_t.is_nan() || expected_t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need C >= 1 and E(T) >= 0, got C={c}, E(T)={expected_t}"
        )));
    }
    let max_y = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let ratio = max_y / pv.min();
    Ok(ratio * ratio * (c * c) as f64 * expected_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::Design;
    use crate::oracle::exact_inclusion;
    use proptest::prelude::*;

    fn pv(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn census_estimate_is_total() {
        let p = pv(&[1.0, 1.0, 1.0]);
        let r = ht_estimate(&[3.0, -1.0, 2.5], &p, &SampleCounts(vec![1, 1, 1]));
        assert_eq!(r.estimate, 4.5);
    }

    #[test]
    fn direct_estimate() {
        let r = ht_estimate(&[1.0, 1.0], &pv(&[0.5, 0.5]), &SampleCounts(vec![1, 0]));
        assert_eq!(r.estimate, 2.0);
        assert_eq!(r.weights, vec![(0, 2.0)]);
    }

    #[test]
    fn poisson_variance_examples() {
        assert_eq!(poisson_variance(&pv(&[0.5, 0.5]), &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(poisson_variance(&pv(&[1.0, 1.0]), &[1.0, 5.0]).unwrap(), 0.0);
        assert_eq!(poisson_variance(&pv(&[0.3, 0.5]), &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn multinomial_variance_examples() {
        assert_eq!(multinomial_variance(&pv(&[1.0, 1.0]), &[1.0, 2.0]).unwrap(), 0.5);
        let p = pv(&[0.25, 0.75, 0.5, 0.5]);
        let y: Vec<f64> = p.as_slice().iter().map(|x| 3.0 * x).collect();
        assert!(multinomial_variance(&p, &y).unwrap().abs() < 1e-15);
        assert_eq!(multinomial_variance(&pv(&[1.0]), &[7.0]).unwrap(), 0.0);
        assert!(matches!(
            multinomial_variance(&pv(&[0.75, 0.75]), &[1.0, 1.0]),
            Err(Error::NonIntegerSampleSize(_))
        ));
    }

    #[test]
    fn proportional_y_has_zero_variance_under_fixed_size() {
        let p = ProbabilityVector::uniform(5, 2).unwrap();
        let pkl = exact_inclusion(Design::Srswor, &p).unwrap();
        let y: Vec<f64> = p.as_slice().iter().map(|x| 2.0 * x).collect();
        assert!(var_ht_exact(&p, &pkl, &y).unwrap().abs() < 1e-14);
    }

    #[test]
    fn var_ht_rejects_monte_carlo_input() {
        let p = pv(&[0.5, 0.5]);
        let pkl = InclusionMatrix::from_estimates(vec![0.5, 0.5], vec![vec![0.5, 0.0], vec![0.0, 0.5]], vec![vec![0.0; 2]; 2], 1000, false);
        assert_eq!(var_ht_exact(&p, &pkl, &[1.0, 1.0]), Err(Error::RequiresExactInclusion));
        assert_eq!(bound_prop0(&p, &pkl, &[1.0, 1.0]), Err(Error::RequiresExactInclusion));
    }

    #[test]
    fn bound_examples() {
        let p = pv(&[0.5, 0.5]);
        let pkl = exact_inclusion(Design::Poisson, &p).unwrap();
        assert_eq!(bound_prop0(&p, &pkl, &[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(bound_prop0(&p, &pkl, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(bound_h4b(&p, &[1.0, 1.0], 0.0).unwrap(), 4.0);
        assert_eq!(bound_h4b(&p, &[1.0, -1.0], 0.0), Err(Error::NegativeY { unit: 1 }));
        assert_eq!(bound_h4b(&p, &[0.0, 0.0], 2.0).unwrap(), 0.0);
        assert_eq!(bound_h4c(&p, &[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(bound_h4c_outer(&p, &[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(bound_h4c(&p, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(bound_h4c(&pv(&[1.0, 1.0]), &[2.0, 3.0]).unwrap(), 13.0);
        assert_eq!(bound_martingale(&p, &[1.0, -0.5], 2, 4.0).unwrap(), 64.0);
        assert_eq!(bound_martingale(&p, &[0.0, 0.0], 2, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn srs_variance_bounded_by_prop0() {
        let p = ProbabilityVector::uniform(4, 2).unwrap();
        let pkl = exact_inclusion(Design::Srswor, &p).unwrap();
        let y = [1.0; 4];
        let v = var_ht_exact(&p, &pkl, &y).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(bound_prop0(&p, &pkl, &y).unwrap() >= v);
    }

    fn probabilities() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..=1.0, 1..12)
    }

    proptest! {
        #[test]
        fn independent_inclusion_reduces_to_poisson(pi in probabilities(), seed in any::<u64>()) {
            let p = pv(&pi);
            let y: Vec<f64> = (0..pi.len()).map(|k| ((seed >> (k % 60)) & 0xff) as f64 / 32.0 - 4.0).collect();
            let pkl = exact_inclusion(Design::Poisson, &p).unwrap();
            let a = var_ht_exact(&p, &pkl, &y).unwrap();
            let b = poisson_variance(&p, &y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }

        #[test]
        fn scale_covariance(pi in probabilities(), c in -5.0f64..5.0) {
            let p = pv(&pi);
            let y: Vec<f64> = (0..pi.len()).map(|k| (k as f64).sin()).collect();
            let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
            let counts = SampleCounts((0..pi.len()).map(|k| (k % 2) as u32).collect());
            let e = ht_estimate(&y, &p, &counts).estimate;
            let ce = ht_estimate(&cy, &p, &counts).estimate;
            prop_assert!((ce - c * e).abs() <= 1e-12 * (1.0 + e.abs() * c.abs()));
            let v = poisson_variance(&p, &y).unwrap();
            let cv = poisson_variance(&p, &cy).unwrap();
            prop_assert!((cv - c * c * v).abs() <= 1e-10 * (1.0 + v * c * c));
            let b = bound_h4c(&p, &y).unwrap();
            let cb = bound_h4c(&p, &cy).unwrap();
            prop_assert!((cb - c * c * b).abs() <= 1e-10 * (1.0 + b * c * c));
        }
    }
}
