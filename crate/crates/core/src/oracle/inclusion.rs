use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::population::ProbabilityVector;

/// First- and second-order inclusion probabilities, exact or estimated.
///
/// For with-replacement designs the off-diagonal entries hold `E[I_k I_l]`
/// rather than joint inclusion probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionMatrix {
    first_order: Vec<f64>,
    second_order: Vec<Vec<f64>>,
    standard_errors: Option<Vec<Vec<f64>>>,
    replicates: usize,
    with_replacement: bool,
}

impl InclusionMatrix {
    pub(crate) fn exact(first_order: Vec<f64>, second_order: Vec<Vec<f64>>, with_replacement: bool) -> Self {
        Self {
            first_order,
            second_order,
            standard_errors: None,
            replicates: 0,
            with_replacement,
        }
    }

    /// Monte Carlo estimates based on `replicates` draws.
    pub fn from_estimates(
        first_order: Vec<f64>,
        second_order: Vec<Vec<f64>>,
        standard_errors: Vec<Vec<f64>>,
        replicates: usize,
        with_replacement: bool,
    ) -> Self {
        Self {
            first_order,
            second_order,
            standard_errors: Some(standard_errors),
            replicates,
            with_replacement,
        }
    }

    pub fn len(&self) -> usize {
        self.first_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_order.is_empty()
    }

    pub fn first_order(&self) -> &[f64] {
        &self.first_order
    }

    pub fn joint(&self, k: usize, l: usize) -> f64 {
        self.second_order[k][l]
    }

    /// Monte Carlo standard error of entry `(k, l)`, `None` when exact.
    pub fn standard_error(&self, k: usize, l: usize) -> Option<f64> {
        self.standard_errors.as_ref().map(|se| se[k][l])
    }

    pub fn is_exact(&self) -> bool {
        self.replicates == 0
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    /// `max_{k≠l} |π_kl − π_k π_l|` and the pair attaining it.
    pub fn max_covariance_gap(&self, pi: &[f64]) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..self.len() {
            for l in k + 1..self.len() {
                let g = (self.joint(k, l) - pi[k] * pi[l]).abs();
                if best.is_none_or(|(b, _, _)| g > b) {
                    best = Some((g, k, l));
                }
            }
        }
        best
    }
}

/// Closed-form inclusion probabilities of Poisson, SRS and multinomial sampling.
pub fn exact_inclusion(design: Design, pv: &ProbabilityVector) -> Result<InclusionMatrix> {
    let pi = pv.as_slice();
    let len = pi.len();
    let mut joint = vec![vec![0.0; len]; len];
    let with_replacement = match design {
        Design::Poisson => {
            for k in 0..len {
                for l in 0..len {
                    joint[k][l] = pi[k] * pi[l];
                }
            }
            false
        }
        Design::Srswor => {
            let n = pv.integral_n()?;
            if !pv.is_uniform() {
                return Err(Error::NonUniformProbabilities);
            }
            let value = if len > 1 {
                (n * (n - 1)) as f64 / (len * (len - 1)) as f64
            } else {
                0.0
            };
            for row in joint.iter_mut() {
                row.fill(value);
            }
            false
        }
        Design::Multinomial => {
            let n = pv.integral_n()? as f64;
            for k in 0..len {
                for l in 0..len {
                    joint[k][l] = pi[k] * pi[l] * (1.0 - 1.0 / n);
                }
            }
            true
        }
        Design::Pivotal | Design::Cube => return Err(Error::UnsupportedDesign(design.to_string())),
    };
    for k in 0..len {
        joint[k][k] = pi[k];
    }
    Ok(InclusionMatrix::exact(pi.to_vec(), joint, with_replacement))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_is_independent() {
        let pv = ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
        let m = exact_inclusion(Design::Poisson, &pv).unwrap();
        assert!((m.joint(0, 1) - 0.21).abs() < 1e-15);
        assert_eq!(m.joint(0, 0), 0.3);
        assert!(m.is_exact());
    }

    #[test]
    fn srs_four_choose_two() {
        let pv = ProbabilityVector::uniform(4, 2).unwrap();
        let m = exact_inclusion(Design::Srswor, &pv).unwrap();
        // 1 of the 6 subsets contains a given pair
        for k in 0..4 {
            for l in 0..4 {
                if k != l {
                    assert!((m.joint(k, l) - 1.0 / 6.0).abs() < 1e-15);
                }
            }
        }
        assert!(!m.with_replacement());
    }

    #[test]
    fn multinomial_is_flagged() {
        let pv = ProbabilityVector::new(vec![1.0, 1.0]).unwrap();
        let m = exact_inclusion(Design::Multinomial, &pv).unwrap();
        assert!(m.with_replacement());
        assert_eq!(m.joint(0, 1), 0.5);
    }

    #[test]
    fn martingale_designs_have_no_closed_form() {
        let pv = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            exact_inclusion(Design::Pivotal, &pv),
            Err(Error::UnsupportedDesign(_))
        ));
    }
}
