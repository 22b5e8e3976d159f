use super::report::{ConditionId, ConditionReport, EvidenceMode, Verdict, Witness};
use super::MC_BAND;
use crate::designs::MartingaleTrace;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::population::ProbabilityVector;

/// Traces required by the innovation decomposition check.
pub const INNOVATION_MIN_TRACES: usize = 10_000;

/// Slack for reconstructing `π(i+1) = π(i) + δ(i)` in floating point.
const STATE_SLACK: f64 = 1e-12;

fn malformed(step: usize, reason: impl Into<String>) -> Error {
    Error::MalformedTrace {
        step,
        reason: reason.into(),
    }
}

/// Verifies one trace against the martingale invariants: per-step zero mean,
/// `C ≤ q + 1`, `⌊N'/(q+1)⌋ ≤ T ≤ N'` where `N'` counts the initially
/// fractional units, and integrality of `π(T)`.
///
/// Structural inconsistencies (a state that does not follow from the recorded
/// innovations, invalid step sizes or branch probabilities) are reported as
/// [`Error::MalformedTrace`]; bound violations yield a failing verdict.
pub fn check_martingale(trace: &MartingaleTrace, pv: &ProbabilityVector, q: usize) -> Result<ConditionReport> {
    let len = pv.len();
    if trace.initial.len() != len || trace.terminal.len() != len {
        return Err(malformed(0, "vector length differs from the probability vector"));
    }
    if trace.initial.iter().zip(pv.as_slice()).any(|(a, b)| a != b) {
        return Err(malformed(0, "initial state differs from the input probabilities"));
    }
    let snap = trace.snap_tolerance;
    let mut pi = trace.initial.clone();
    let mut max_residual = 0.0_f64;
    let mut zero_mean_failure = None;
    for (i, s) in trace.steps.iter().enumerate() {
        let m = s.units.len();
        if m == 0 || s.pi_before.len() != m || s.direction.len() != m || s.delta.len() != m {
            return Err(malformed(i, "inconsistent step vector lengths"));
        }
        if s.units.windows(2).any(|w| w[0] >= w[1]) || s.units[m - 1] >= len {
            return Err(malformed(i, "affected units are not ascending unit indices"));
        }
        if !(s.lambda1 > 0.0 && s.lambda2 > 0.0) {
            return Err(malformed(i, "step sizes must be positive"));
        }
        let expected_prob = match s.branch {
            crate::designs::Branch::Plus => s.plus_probability(),
            crate::designs::Branch::Minus => s.minus_probability(),
        };
        if s.branch_prob != expected_prob {
            return Err(malformed(i, "branch probability does not match the step sizes"));
        }
        for (j, &k) in s.units.iter().enumerate() {
            if (pi[k] - s.pi_before[j]).abs() > STATE_SLACK {
                return Err(malformed(i, format!("pi({i}) of unit {k} does not follow from the innovations")));
            }
            let next = s.pi_before[j] + s.delta[j];
            if !(-STATE_SLACK..=1.0 + STATE_SLACK).contains(&next) {
                return Err(malformed(i, format!("unit {k} leaves [0, 1]")));
            }
            pi[k] = next;
        }
        let residual = s.expected_innovation().abs();
        max_residual = max_residual.max(residual);
        if residual > 4.0 * f64::EPSILON * s.lambda1.max(s.lambda2) && zero_mean_failure.is_none() {
            zero_mean_failure = Some(i);
        }
    }
    if pi.iter().zip(&trace.terminal).any(|(a, b)| (a - b).abs() > STATE_SLACK) {
        return Err(malformed(trace.steps.len(), "terminal state does not follow from the innovations"));
    }
    if trace.replay() != trace.terminal {
        return Err(malformed(trace.steps.len(), "replaying the branch decisions does not reproduce pi(T)"));
    }

    let fractional = pv
        .as_slice()
        .iter()
        .filter(|p| **p > snap && **p < 1.0 - snap)
        .count();
    let steps = trace.steps.len();
    let c = trace.steps.iter().map(|s| s.units.len()).max().unwrap_or(0);
    let t_lower = fractional / (q + 1);
    let terminal_gap = trace
        .terminal
        .iter()
        .map(|p| p.min(1.0 - p))
        .fold(0.0_f64, f64::max);

    let failure = zero_mean_failure
        .map(Witness::Step)
        .or_else(|| {
            trace
                .steps
                .iter()
                .position(|s| s.units.len() > q + 1)
                .map(Witness::Step)
        })
        .or_else(|| (steps < t_lower || steps > fractional).then_some(Witness::Step(steps)))
        .or_else(|| {
            trace
                .terminal
                .iter()
                .position(|p| p.min(1.0 - p) > snap)
                .map(Witness::Unit)
        });

    Ok(ConditionReport::new(ConditionId::Martingale, EvidenceMode::Exact)
        .stat("T", steps as f64)
        .stat("C", c as f64)
        .stat("fractional_units", fractional as f64)
        .stat("T_lower", t_lower as f64)
        .stat("T_upper", fractional as f64)
        .stat("max_zero_mean_residual", max_residual)
        .stat("max_terminal_gap", terminal_gap)
        .verdict(
            if failure.is_some() { Verdict::Fails } else { Verdict::Holds },
            failure,
        ))
}

/// Aggregates per-trace martingale reports over replicates.
#[derive(Debug, Clone, Default)]
pub struct MartingaleSummary {
    runs: usize,
    failures: usize,
    first_failure: Option<usize>,
    sum_t: CompensatedSum,
    min_t: Option<usize>,
    max_t: usize,
    max_c: usize,
    max_residual: f64,
    max_terminal_gap: f64,
}

impl MartingaleSummary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the report of the trace with replicate index `replicate`.
    pub fn add(&mut self, replicate: usize, report: &ConditionReport) {
        let get = |k: &str| report.statistic(k).unwrap_or(0.0);
        let t = get("T") as usize;
        self.runs += 1;
        if report.verdict.is_failure() {
            self.failures += 1;
            self.first_failure = Some(self.first_failure.map_or(replicate, |f| f.min(replicate)));
        }
        self.sum_t.add(t as f64);
        self.min_t = Some(self.min_t.map_or(t, |m| m.min(t)));
        self.max_t = self.max_t.max(t);
        self.max_c = self.max_c.max(get("C") as usize);
        self.max_residual = self.max_residual.max(get("max_zero_mean_residual"));
        self.max_terminal_gap = self.max_terminal_gap.max(get("max_terminal_gap"));
    }

    /// Merges a summary of later replicates.
    pub fn merge(&mut self, other: &Self) {
        self.runs += other.runs;
        self.failures += other.failures;
        self.first_failure = match (self.first_failure, other.first_failure) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.sum_t.add(other.sum_t.value());
        self.min_t = match (self.min_t, other.min_t) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max_t = self.max_t.max(other.max_t);
        self.max_c = self.max_c.max(other.max_c);
        self.max_residual = self.max_residual.max(other.max_residual);
        self.max_terminal_gap = self.max_terminal_gap.max(other.max_terminal_gap);
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn mean_t(&self) -> f64 {
        self.sum_t.value() / self.runs.max(1) as f64
    }

    pub fn max_c(&self) -> usize {
        self.max_c
    }

    pub fn finish(&self) -> ConditionReport {
        ConditionReport::new(ConditionId::Martingale, EvidenceMode::Exact)
            .stat("runs", self.runs as f64)
            .stat("failures", self.failures as f64)
            .stat("mean_T", self.mean_t())
            .stat("min_T", self.min_t.unwrap_or(0) as f64)
            .stat("max_T", self.max_t as f64)
            .stat("max_C", self.max_c as f64)
            .stat("max_zero_mean_residual", self.max_residual)
            .stat("max_terminal_gap", self.max_terminal_gap)
            .verdict(
                if self.failures > 0 { Verdict::Fails } else { Verdict::Holds },
                self.first_failure.map(Witness::Replicate),
            )
    }
}

/// Running sums for comparing `Cov(I − π)` with `E[Σ_i δ(i) δ(i)ᵀ]`.
#[derive(Debug, Clone)]
pub struct InnovationAccumulator {
    pi: Vec<f64>,
    runs: usize,
    outer: Vec<CompensatedSum>,
    outer_sq: Vec<CompensatedSum>,
    innov: Vec<CompensatedSum>,
    innov_sq: Vec<CompensatedSum>,
    scratch: Vec<f64>,
}

impl InnovationAccumulator {
    pub fn new(pv: &ProbabilityVector) -> Self {
        let len = pv.len();
        let cells = len * (len + 1) / 2;
        Self {
            pi: pv.as_slice().to_vec(),
            runs: 0,
            outer: vec![CompensatedSum::new(); cells],
            outer_sq: vec![CompensatedSum::new(); cells],
            innov: vec![CompensatedSum::new(); cells],
            innov_sq: vec![CompensatedSum::new(); cells],
            scratch: vec![0.0; len * len],
        }
    }

    pub fn add(&mut self, trace: &MartingaleTrace) {
        let len = self.pi.len();
        let counts = trace.counts();
        let dev: Vec<f64> = counts
            .as_slice()
            .iter()
            .zip(&self.pi)
            .map(|(&c, p)| c as f64 - p)
            .collect();
        self.scratch.iter_mut().for_each(|x| *x = 0.0);
        for s in &trace.steps {
            for (a, &k) in s.units.iter().enumerate() {
                for (b, &l) in s.units.iter().enumerate() {
                    self.scratch[k * len + l] += s.delta[a] * s.delta[b];
                }
            }
        }
        let mut idx = 0;
        for k in 0..len {
            for l in k..len {
                let o = dev[k] * dev[l];
                let d = self.scratch[k * len + l];
                self.outer[idx].add(o);
                self.outer_sq[idx].add(o * o);
                self.innov[idx].add(d);
                self.innov_sq[idx].add(d * d);
                idx += 1;
            }
        }
        self.runs += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in [
            (&mut self.outer, &other.outer),
            (&mut self.outer_sq, &other.outer_sq),
            (&mut self.innov, &other.innov),
            (&mut self.innov_sq, &other.innov_sq),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                x.add(y.value());
            }
        }
        self.runs += other.runs;
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn finish(&self) -> ConditionReport {
        let len = self.pi.len();
        let r = self.runs.max(1) as f64;
        let se = |s: &CompensatedSum, sq: &CompensatedSum| {
            let m = s.value() / r;
            ((sq.value() / r - m * m).max(0.0) / r).sqrt()
        };
        let mut worst = (f64::NEG_INFINITY, 0usize, 0usize, 0.0, 0.0);
        let mut violation = None;
        let mut max_gap = 0.0_f64;
        let mut idx = 0;
        for k in 0..len {
            for l in k..len {
                let cov = self.outer[idx].value() / r;
                let innov = self.innov[idx].value() / r;
                let gap = (cov - innov).abs();
                let combined = (se(&self.outer[idx], &self.outer_sq[idx]).powi(2)
                    + se(&self.innov[idx], &self.innov_sq[idx]).powi(2))
                .sqrt();
                let z = if combined > 0.0 {
                    gap / combined
                } else if gap > STATE_SLACK {
                    f64::INFINITY
                } else {
                    0.0
                };
                max_gap = max_gap.max(gap);
                if z > worst.0 {
                    worst = (z, k, l, gap, combined);
                }
                if z > MC_BAND && violation.is_none() {
                    violation = Some((k, l));
                }
                idx += 1;
            }
        }
        let (z, k, l, gap, combined) = worst;
        ConditionReport::new(ConditionId::Innovation, EvidenceMode::MonteCarlo)
            .stat("runs", self.runs as f64)
            .stat("max_gap", max_gap)
            .stat("worst_gap", gap)
            .stat("worst_combined_se", combined)
            .stat("worst_z", if z.is_finite() { z.max(0.0) } else { f64::MAX })
            .verdict(
                if violation.is_some() { Verdict::Fails } else { Verdict::HoldsWithinMcError },
                Some(violation.map_or(Witness::Pair(k, l), |(a, b)| Witness::Pair(a, b))),
            )
    }
}

/// Entrywise comparison of the empirical covariance of `I − π` with the
/// empirical mean of `Σ_i δ(i) δ(i)ᵀ`.
pub fn check_innovation_decomposition(traces: &[MartingaleTrace], pv: &ProbabilityVector) -> Result<ConditionReport> {
    if traces.len() < INNOVATION_MIN_TRACES {
        return Err(Error::TooFewReplicates {
            replicates: traces.len(),
            minimum: INNOVATION_MIN_TRACES,
        });
    }
    let mut acc = InnovationAccumulator::new(pv);
    for t in traces {
        if t.initial.len() != pv.len() {
            return Err(malformed(0, "vector length differs from the probability vector"));
        }
        acc.add(t);
    }
    Ok(acc.finish())
}
