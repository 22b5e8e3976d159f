//! Finite-population domain types and input validation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Tolerance used when checking that an expected sample size is integral.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// A finite population: unit labels, the variable of interest and
/// `q` auxiliary columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    ids: Vec<String>,
    y: Vec<f64>,
    aux: Vec<Vec<f64>>,
}

impl Population {
    /// Builds a population, checking that every column has one entry per unit
    /// and that labels are unique.
    pub fn new(ids: Vec<String>, y: Vec<f64>, aux: Vec<Vec<f64>>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if ids.len() != y.len() {
            return Err(Error::LengthMismatch {
                what: "ids",
                expected: y.len(),
                found: ids.len(),
            });
        }
        for col in &aux {
            if col.len() != y.len() {
                return Err(Error::LengthMismatch {
                    what: "auxiliary column",
                    expected: y.len(),
                    found: col.len(),
                });
            }
        }
        if let Some(unit) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "y", unit });
        }
        for col in &aux {
            if let Some(unit) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "auxiliary",
                    unit,
                });
            }
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { ids, y, aux })
    }

    /// Population with labels `1..=N` and no auxiliaries.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        let ids = (1..=y.len()).map(|k| k.to_string()).collect();
        Self::new(ids, y, Vec::new())
    }

    pub fn with_aux(mut self, aux: Vec<Vec<f64>>) -> Result<Self> {
        self.aux = Vec::new();
        let Self { ids, y, .. } = self;
        Self::new(ids, y, aux)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Auxiliary columns, each of length `N`.
    pub fn aux(&self) -> &[Vec<f64>] {
        &self.aux
    }

    /// Number of auxiliary variables.
    pub fn q(&self) -> usize {
        self.aux.len()
    }

    /// Population total of the variable of interest.
    pub fn total(&self) -> f64 {
        total(self)
    }
}

/// `t_y = Σ_k y_k`, accumulated with compensation.
pub fn total(pop: &Population) -> f64 {
    numeric::sum(pop.y.iter().copied())
}

/// First-order inclusion probabilities (or expected selection counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pi: Vec<f64>,
    n: f64,
}

impl ProbabilityVector {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for (unit, &value) in pi.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::ProbabilityOutOfRange { unit, value });
            }
        }
        let n = numeric::sum(pi.iter().copied());
        Ok(Self { pi, n })
    }

    /// Equal probabilities `n / N`.
    pub fn uniform(population: usize, n: usize) -> Result<Self> {
        if population == 0 || n == 0 || n > population {
            return Err(Error::InvalidSize { population, n });
        }
        Self::new(vec![n as f64 / population as f64; population])
    }

    /// Probabilities proportional to `sizes`, summing to `n`, capped at 1.
    /// Units that would exceed 1 are set to 1 and the remainder is
    /// reallocated among the others until no probability exceeds 1.
    pub fn proportional(sizes: &[f64], n: f64) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if let Some(unit) = sizes.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::ProbabilityOutOfRange {
                unit,
                value: sizes[unit],
            });
        }
        if !(n > 0.0 && n <= sizes.len() as f64) {
            return Err(Error::InvalidArgument(format!(
                "expected sample size {n} must lie in (0, {}]",
                sizes.len()
            )));
        }
        let mut pi = vec![0.0; sizes.len()];
        let mut capped = vec![false; sizes.len()];
        loop {
            let n_capped = capped.iter().filter(|c| **c).count() as f64;
            let remaining = n - n_capped;
            let mass = numeric::sum(
                sizes
                    .iter()
                    .zip(&capped)
                    .filter(|(_, c)| !**c)
                    .map(|(s, _)| *s),
            );
            let mut changed = false;
            for k in 0..sizes.len() {
                if capped[k] {
                    pi[k] = 1.0;
                    continue;
                }
                let p = remaining * sizes[k] / mass;
                if p >= 1.0 {
                    capped[k] = true;
                    changed = true;
                }
                pi[k] = p.min(1.0);
            }
            if !changed {
                break;
            }
        }
        Self::new(pi)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Expected sample size `n = Σ π_k`.
    pub fn n(&self) -> f64 {
        self.n
    }

    /// `n` as an integer, or [`Error::NonIntegerSampleSize`].
    pub fn integral_n(&self) -> Result<usize> {
        numeric::as_integer(self.n, INTEGRALITY_TOL).ok_or(Error::NonIntegerSampleSize(self.n))
    }

    pub fn min(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether every probability equals the first one.
    pub fn is_uniform(&self) -> bool {
        let first = self.pi[0];
        self.pi.iter().all(|p| (p - first).abs() <= 1e-12)
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.pi[k]
    }
}

/// Number of times each unit was selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleCounts(pub Vec<u32>);

impl SampleCounts {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Realized sample size, counting repetitions.
    pub fn size(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    /// Indices of the units with a nonzero count.
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(k, _)| k)
    }

    pub fn is_without_replacement(&self) -> bool {
        self.0.iter().all(|&c| c <= 1)
    }
}

/// A population paired with a matching probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub population: Population,
    pub probabilities: ProbabilityVector,
}

impl Frame {
    pub fn new(population: Population, probabilities: ProbabilityVector) -> Result<Self> {
        validate_inputs(&population, &probabilities)?;
        Ok(Self {
            population,
            probabilities,
        })
    }
}

/// Checks that `pv` has one entry per unit of `pop`, each in `(0, 1]`.
pub fn validate_inputs(pop: &Population, pv: &ProbabilityVector) -> Result<()> {
    if pv.len() != pop.len() {
        return Err(Error::LengthMismatch {
            what: "probability vector",
            expected: pop.len(),
            found: pv.len(),
        });
    }
    for (unit, &value) in pv.as_slice().iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::ProbabilityOutOfRange { unit, value });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(y: &[f64]) -> Population {
        Population::from_values(y.to_vec()).unwrap()
    }

    #[test]
    fn validates_in_range_probabilities() {
        let p = pop(&[1.0, 2.0, 3.0]);
        let pv = ProbabilityVector::new(vec![0.5, 0.5, 1.0]).unwrap();
        assert!(validate_inputs(&p, &pv).is_ok());
        assert_eq!(pv.n(), 2.0);
    }

    #[test]
    fn rejects_length_mismatch() {
        let p = pop(&[1.0, 2.0, 3.0]);
        let pv = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            validate_inputs(&p, &pv),
            Err(Error::LengthMismatch { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn rejects_zero_probability_and_names_unit() {
        assert_eq!(
            ProbabilityVector::new(vec![0.5, 0.0, 1.0]),
            Err(Error::ProbabilityOutOfRange { unit: 1, value: 0.0 })
        );
        assert!(matches!(
            ProbabilityVector::new(vec![2.0]),
            Err(Error::ProbabilityOutOfRange { unit: 0, .. })
        ));
        assert!(ProbabilityVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn validation_is_idempotent() {
        let frame = Frame::new(
            pop(&[1.0, 2.0]),
            ProbabilityVector::new(vec![0.3, 0.7]).unwrap(),
        )
        .unwrap();
        let again = Frame::new(frame.population.clone(), frame.probabilities.clone()).unwrap();
        assert_eq!(frame, again);
    }

    #[test]
    fn totals() {
        assert_eq!(total(&pop(&[1.0, 2.0, 3.0])), 6.0);
        assert_eq!(total(&pop(&[0.0, 0.0])), 0.0);
        assert_eq!(total(&pop(&[-1.0, 1.0])), 0.0);
    }

    #[test]
    fn population_rejects_bad_shapes() {
        assert_eq!(Population::from_values(vec![]), Err(Error::EmptyPopulation));
        let dup = Population::new(
            vec!["a".into(), "a".into()],
            vec![1.0, 2.0],
            Vec::new(),
        );
        assert_eq!(dup, Err(Error::DuplicateId("a".into())));
        let short_aux = pop(&[1.0, 2.0]).with_aux(vec![vec![1.0]]);
        assert!(matches!(short_aux, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn integral_sample_size() {
        assert_eq!(ProbabilityVector::new(vec![1.0, 1.0]).unwrap().integral_n(), Ok(2));
        let pv = ProbabilityVector::new(vec![0.75, 0.75]).unwrap();
        assert_eq!(pv.integral_n(), Err(Error::NonIntegerSampleSize(1.5)));
    }

    #[test]
    fn proportional_allocation_caps_large_units() {
        let pv = ProbabilityVector::proportional(&[10.0, 1.0, 1.0, 1.0, 1.0], 2.0).unwrap();
        assert_eq!(pv[0], 1.0);
        for k in 1..5 {
            assert!((pv[k] - 0.25).abs() < 1e-15);
        }
        assert!((pv.n() - 2.0).abs() < 1e-12);
    }
}
