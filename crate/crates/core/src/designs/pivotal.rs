//! Ordered pivotal sampling: the first two fractional units duel until one
//! of them is decided.

use super::martingale::MartingaleState;
use super::trace::{indicators, is_fractional, MartingaleTrace};
use super::Tolerances;
use crate::error::Result;
use crate::population::{ProbabilityVector, SampleCounts};
use crate::rng::RandomStream;

pub(crate) fn run(
    pv: &ProbabilityVector,
    rng: &mut RandomStream,
    tol: &Tolerances,
    traced: bool,
) -> Result<(SampleCounts, Option<MartingaleTrace>)> {
    let snap = tol.snap;
    let mut state = MartingaleState::new(pv.as_slice(), snap, traced);
    let mut leader: Option<usize> = None;
    for k in 0..pv.len() {
        if !is_fractional(state.pi[k], snap) {
            continue;
        }
        match leader {
            None => leader = Some(k),
            Some(a) => {
                state.step(&[a, k], &[1.0, -1.0], rng)?;
                leader = if is_fractional(state.pi[k], snap) {
                    Some(k)
                } else if is_fractional(state.pi[a], snap) {
                    Some(a)
                } else {
                    None
                };
            }
        }
    }
    if let Some(a) = leader {
        // a lone fractional unit remains when n is not an integer
        state.step(&[a], &[1.0], rng)?;
    }
    let counts = indicators(&state.pi);
    let trace = state
        .steps
        .map(|steps| MartingaleTrace::new(pv.as_slice().to_vec(), state.pi, steps, snap));
    Ok((counts, trace))
}

/// Pivotal sampling with its full martingale trace.
pub fn pivotal_sample(pv: &ProbabilityVector, rng: &mut RandomStream) -> (SampleCounts, MartingaleTrace) {
    let (counts, trace) = run(pv, rng, &Tolerances::default(), true)
        .expect("pivotal duels always have a nonzero direction");
    (counts, trace.expect("traced run"))
}
