//! Fast flight/landing procedure for balanced sampling.
//!
//! At each step only the first `q + 1` fractional units move, along a
//! direction in the kernel of their constraint columns `x_k / π_k`. When no
//! such direction exists, the last constraint is dropped; with no
//! constraints left, units are rounded one at a time.

use super::martingale::MartingaleState;
use super::trace::{indicators, is_fractional, MartingaleTrace};
use super::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::ConstraintMatrix;
use crate::population::{validate_inputs, Population, ProbabilityVector, SampleCounts};
use crate::rng::RandomStream;

pub(crate) fn run(
    pop: &Population,
    pv: &ProbabilityVector,
    rng: &mut RandomStream,
    tol: &Tolerances,
    traced: bool,
) -> Result<(SampleCounts, Option<MartingaleTrace>)> {
    validate_inputs(pop, pv)?;
    let q = pop.q();
    if q == 0 {
        return Err(Error::MissingAuxiliaries);
    }
    let snap = tol.snap;
    let pi0 = pv.as_slice();
    let mut state = MartingaleState::new(pi0, snap, traced);

    let mut window: Vec<usize> = Vec::with_capacity(q + 1);
    let mut next = 0;
    let mut constraints = q;
    loop {
        window.retain(|&k| is_fractional(state.pi[k], snap));
        while window.len() <= q && next < pop.len() {
            if is_fractional(state.pi[next], snap) {
                window.push(next);
            }
            next += 1;
        }
        if window.is_empty() {
            break;
        }
        let a = ConstraintMatrix::for_units(pop.aux(), pi0, &window, constraints);
        match a.kernel_vector(tol.rank) {
            Some(v) => state.step(&window, &v, rng)?,
            None => {
                assert!(
                    window.len() <= constraints,
                    "a {constraints}x{} matrix must have a kernel",
                    window.len()
                );
                constraints -= 1;
            }
        }
    }
    let counts = indicators(&state.pi);
    let trace = state
        .steps
        .map(|steps| MartingaleTrace::new(pi0.to_vec(), state.pi, steps, snap));
    Ok((counts, trace))
}

/// Fast cube method with its full martingale trace.
pub fn fast_cube_sample(
    pop: &Population,
    pv: &ProbabilityVector,
    rng: &mut RandomStream,
) -> Result<(SampleCounts, MartingaleTrace)> {
    let (counts, trace) = run(pop, pv, rng, &Tolerances::default(), true)?;
    Ok((counts, trace.expect("traced run")))
}

/// Returns `pop` with `π` as its only balancing variable when it has no
/// auxiliaries, which balances on the sample size.
pub fn with_size_constraint(pop: &Population, pv: &ProbabilityVector) -> Result<Population> {
    if pop.q() > 0 {
        return Ok(pop.clone());
    }
    pop.clone().with_aux(vec![pv.as_slice().to_vec()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size_balanced(pi: &[f64]) -> (Population, ProbabilityVector) {
        let pv = ProbabilityVector::new(pi.to_vec()).unwrap();
        let pop = Population::from_values(vec![1.0; pi.len()]).unwrap();
        (with_size_constraint(&pop, &pv).unwrap(), pv)
    }

    #[test]
    fn fixed_size_and_unbiased() {
        let (pop, pv) = size_balanced(&[0.5; 4]);
        let r = 100_000;
        let mut hits = [0usize; 4];
        for s in 0..r {
            let (counts, trace) = fast_cube_sample(&pop, &pv, &mut RandomStream::new(17, s)).unwrap();
            assert_eq!(counts.size(), 2);
            assert!(trace.c <= 2);
            assert!((2..=4).contains(&trace.t));
            for k in counts.selected() {
                hits[k] += 1;
            }
        }
        let se = (0.25 / r as f64).sqrt();
        for h in hits {
            assert!((h as f64 / r as f64 - 0.5).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn single_certain_unit() {
        let (pop, pv) = size_balanced(&[1.0]);
        let (counts, trace) = fast_cube_sample(&pop, &pv, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(counts.0, vec![1]);
        assert_eq!(trace.t, 0);
    }

    #[test]
    fn two_units_never_together() {
        let (pop, pv) = size_balanced(&[0.5, 0.5]);
        for s in 0..5000 {
            let (counts, trace) = fast_cube_sample(&pop, &pv, &mut RandomStream::new(3, s)).unwrap();
            assert_eq!(counts.size(), 1);
            assert_eq!(trace.t, 1);
            assert_eq!(trace.steps[0].units, vec![0, 1]);
        }
    }

    #[test]
    fn requires_auxiliaries() {
        let pv = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let pop = Population::from_values(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            fast_cube_sample(&pop, &pv, &mut RandomStream::new(0, 0)).unwrap_err(),
            Error::MissingAuxiliaries
        );
    }

    #[test]
    fn flight_steps_preserve_balancing_totals() {
        let pi = vec![0.3, 0.7, 0.4, 0.6, 0.5, 0.25, 0.75, 0.5];
        let pv = ProbabilityVector::new(pi.clone()).unwrap();
        let x2: Vec<f64> = (0..pi.len()).map(|k| (k as f64 + 1.0).sqrt()).collect();
        let pop = Population::from_values(vec![0.0; pi.len()])
            .unwrap()
            .with_aux(vec![pi.clone(), x2.clone()])
            .unwrap();
        let target: Vec<f64> = pop.aux().iter().map(|c| c.iter().sum()).collect();
        for s in 0..500 {
            let (_, trace) = fast_cube_sample(&pop, &pv, &mut RandomStream::new(21, s)).unwrap();
            let states = trace.states();
            for (i, st) in states.iter().enumerate() {
                // balance is exact while the window holds q+1 fractional units
                if i > 0 && states[i - 1].iter().filter(|p| is_fractional(**p, 1e-9)).count() < 3 {
                    break;
                }
                for (col, t) in pop.aux().iter().zip(&target) {
                    let ht: f64 = st.iter().zip(col).zip(&pi).map(|((p, x), p0)| x / p0 * p).sum();
                    assert!((ht - t).abs() < 1e-9, "step {i}: {ht} vs {t}");
                }
            }
        }
    }
}
