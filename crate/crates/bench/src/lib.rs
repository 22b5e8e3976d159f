//! Fixtures shared by the benchmarks.

use sampler_core::designs::with_size_constraint;
use sampler_core::{Population, ProbabilityVector};

/// `N` units with `π ∝ 1 + (k mod 10)/10` summing to `N/4`, balanced on `π`
/// plus `extra` further variables.
pub fn fixture(len: usize, extra: usize) -> (Population, ProbabilityVector) {
    let sizes: Vec<f64> = (0..len).map(|k| 1.0 + (k % 10) as f64 / 10.0).collect();
    let pv = ProbabilityVector::proportional(&sizes, (len / 4).max(1) as f64).expect("valid sizes");
    let y: Vec<f64> = (1..=len).map(|k| 0.5 + 0.4 * (k as f64).sin()).collect();
    let base = Population::from_values(y).expect("finite values");
    let pop = with_size_constraint(&base, &pv).expect("matching lengths");
    if extra == 0 {
        return (pop, pv);
    }
    let mut aux = pop.aux().to_vec();
    for j in 0..extra {
        aux.push((0..len).map(|k| (((k + 1) * (j + 3)) % 17) as f64 + 1.0).collect());
    }
    (pop.with_aux(aux).expect("matching lengths"), pv)
}
