use serde::{Deserialize, Serialize};

use super::report::{ConditionId, ConditionReport, EvidenceMode, Verdict, Witness};
use super::sequence::PopulationSequence;
use super::MC_BAND;
use crate::designs::{Design, Sampler};
use crate::error::{Error, Result};
use crate::estimators::{bound_h4c, bound_h4c_outer, multinomial_variance, poisson_variance, var_ht_exact};
use crate::numeric;
use crate::oracle::{exact_inclusion, mc_moments, InclusionMatrix, McConfig};
use crate::population::{Population, ProbabilityVector};

/// Replicates required for a Monte Carlo comparison against the multinomial benchmark.
pub const H4C_MIN_REPLICATES: usize = 10_000;

/// Relative slack for exact comparisons.
const EXACT_SLACK: f64 = 1e-12;

/// Finite-population thresholds for the verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Largest tolerated deviation of `n_t/N_t` from its final value.
    pub fraction_tolerance: f64,
    /// Required lower bound on every `π_k`.
    pub lambda1: f64,
    /// Ceiling on `N⁻¹ Σ y²`; `None` only requires finiteness.
    pub second_moment_ceiling: Option<f64>,
    /// Ceiling on `max |y_k|`; `None` only requires finiteness.
    pub bound_ceiling: Option<f64>,
    /// Ceiling on `n max |π_kl − π_k π_l|`; `None` only requires finiteness.
    pub h4_ceiling: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fraction_tolerance: 0.01,
            lambda1: 0.01,
            second_moment_ceiling: None,
            bound_ceiling: None,
            h4_ceiling: None,
        }
    }
}

fn under_ceiling(value: f64, ceiling: Option<f64>) -> bool {
    value.is_finite() && ceiling.is_none_or(|c| value <= c)
}

/// Sampling fraction, probability floor and moment conditions along a sequence.
pub fn check_h1_h3(seq: &PopulationSequence, thresholds: &Thresholds) -> Result<Vec<ConditionReport>> {
    if seq.len() < 3 {
        return Err(Error::EmptySequence {
            required: 3,
            found: seq.len(),
        });
    }
    let mut ratios = Vec::with_capacity(seq.len());
    let mut min_pi = Vec::with_capacity(seq.len());
    let mut second = Vec::with_capacity(seq.len());
    let mut max_abs = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        let (pop, pv) = seq.point(t)?;
        ratios.push(pv.n() / pop.len() as f64);
        min_pi.push(pv.min());
        second.push(numeric::sum(pop.y().iter().map(|v| v * v)) / pop.len() as f64);
        max_abs.push(pop.y().iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
    };
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc })
    };

    let f = *ratios.last().unwrap();
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - f).abs()).collect();
    let (dev_at, deviation) = argmax(&deviations);
    let h1_ok = f > 0.0 && f < 1.0 && deviation <= thresholds.fraction_tolerance;
    let h1 = ConditionReport::new(ConditionId::H1, EvidenceMode::Exact)
        .stat("f", f)
        .stat("max_fraction_deviation", deviation)
        .verdict(
            if h1_ok { Verdict::Holds } else { Verdict::Fails },
            Some(Witness::Point(dev_at)),
        );

    let (lambda_at, lambda) = argmin(&min_pi);
    let h2 = ConditionReport::new(ConditionId::H2, EvidenceMode::Exact)
        .stat("lambda1", lambda)
        .stat("lambda1_required", thresholds.lambda1)
        .verdict(
            if lambda >= thresholds.lambda1 { Verdict::Holds } else { Verdict::Fails },
            Some(Witness::Point(lambda_at)),
        );

    let (c1_at, c1) = argmax(&second);
    let h3 = ConditionReport::new(ConditionId::H3, EvidenceMode::Exact)
        .stat("c1", c1)
        .verdict(
            if under_ceiling(c1, thresholds.second_moment_ceiling) { Verdict::Holds } else { Verdict::Fails },
            Some(Witness::Point(c1_at)),
        );

    let (bound_at, bound) = argmax(&max_abs);
    let h3b = ConditionReport::new(ConditionId::H3b, EvidenceMode::Exact)
        .stat("c1", c1)
        .stat("max_abs_y", bound)
        .verdict(
            if under_ceiling(bound, thresholds.bound_ceiling) { Verdict::Holds } else { Verdict::Fails },
            Some(Witness::Point(bound_at)),
        );
    Ok(vec![h1, h2, h3, h3b])
}

fn mode_of(inc: &InclusionMatrix) -> EvidenceMode {
    if inc.is_exact() {
        EvidenceMode::Exact
    } else {
        EvidenceMode::MonteCarlo
    }
}

fn check_matrix(inc: &InclusionMatrix, pv: &ProbabilityVector) -> Result<()> {
    if inc.len() != pv.len() {
        return Err(Error::LengthMismatch {
            what: "inclusion matrix",
            expected: pv.len(),
            found: inc.len(),
        });
    }
    Ok(())
}

/// `n · max_{k≠l} |π_kl − π_k π_l|` at the given population size.
pub fn check_h4(inc: &InclusionMatrix, pv: &ProbabilityVector, ceiling: Option<f64>) -> Result<ConditionReport> {
    check_matrix(inc, pv)?;
    let n = pv.n();
    let pi = pv.as_slice();
    let (gap, k, l) = inc.max_covariance_gap(pi).unwrap_or((0.0, 0, 0));
    let stat = n * gap;
    let mut report = ConditionReport::new(ConditionId::H4, mode_of(inc))
        .stat("n_max_covariance_gap", stat)
        .note("finite-population value; the limiting condition is not certified");
    if inc.is_exact() {
        let ok = under_ceiling(stat, ceiling);
        report = report.verdict(
            if ok { Verdict::Holds } else { Verdict::Fails },
            Some(Witness::Pair(k, l)),
        );
    } else {
        // band on the maximizing pair only
        let se = inc.standard_error(k, l).unwrap_or(0.0);
        let lower = (stat - MC_BAND * n * se).max(0.0);
        let upper = stat + MC_BAND * n * se;
        let ok = ceiling.is_none_or(|c| lower <= c);
        report = report
            .stat("band_lower", lower)
            .stat("band_upper", upper)
            .verdict(
                if ok { Verdict::HoldsWithinMcError } else { Verdict::Fails },
                Some(Witness::Pair(k, l)),
            );
    }
    Ok(report)
}

/// Largest relative excess `n (π_kl / (π_k π_l) − 1)`, clamped at zero, and its pair.
fn a_hat(joint: impl Fn(usize, usize) -> f64, pi: &[f64], n: f64) -> (f64, usize, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for k in 0..pi.len() {
        for l in k + 1..pi.len() {
            let a = n * (joint(k, l) / (pi[k] * pi[l]) - 1.0);
            if a > best.0 {
                best = (a, k, l);
            }
        }
    }
    (best.0.max(0.0), best.1, best.2)
}

/// Estimates the smallest `a ≥ 0` with `π_kl ≤ (1 + a/n) π_k π_l` for all pairs.
pub fn check_h4b(inc: &InclusionMatrix, pv: &ProbabilityVector) -> Result<ConditionReport> {
    check_matrix(inc, pv)?;
    let pi = pv.as_slice();
    let n = pv.n();
    let (a, _, _) = a_hat(|k, l| inc.joint(k, l), pi, n);
    let mut report = ConditionReport::new(ConditionId::H4b, mode_of(inc)).stat("a_hat", a);
    if inc.is_exact() {
        report = report.verdict(Verdict::Holds, None);
    } else {
        let (upper, _, _) = a_hat(
            |k, l| inc.joint(k, l) + MC_BAND * inc.standard_error(k, l).unwrap_or(0.0),
            pi,
            n,
        );
        report = report
            .stat("a_hat_upper", upper)
            .verdict(Verdict::HoldsWithinMcError, None);
    }
    Ok(report)
}

/// `π_kl ≤ π_k π_l` for every pair; Monte Carlo estimates may exceed the
/// product by at most three standard errors.
pub fn check_syg(inc: &InclusionMatrix, pv: &ProbabilityVector) -> Result<ConditionReport> {
    check_matrix(inc, pv)?;
    let pi = pv.as_slice();
    let n = pv.n();
    let (a, _, _) = a_hat(|k, l| inc.joint(k, l), pi, n);
    let mut worst: Option<(f64, usize, usize)> = None;
    let mut violation: Option<(usize, usize)> = None;
    for k in 0..pi.len() {
        for l in k + 1..pi.len() {
            let product = pi[k] * pi[l];
            let excess = inc.joint(k, l) - product;
            let (score, violated) = match inc.standard_error(k, l) {
                None => (excess / product, excess > EXACT_SLACK * product),
                Some(se) => {
                    let z = if se > 0.0 {
                        excess / se
                    } else if excess > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    (z, excess > MC_BAND * se)
                }
            };
            if worst.is_none_or(|(w, _, _)| score > w) {
                worst = Some((score, k, l));
            }
            if violated && violation.is_none() {
                violation = Some((k, l));
            }
        }
    }
    let (score, wk, wl) = worst.unwrap_or((0.0, 0, 0));
    let verdict = match (violation.is_some(), inc.is_exact()) {
        (true, _) => Verdict::Fails,
        (false, true) => Verdict::Holds,
        (false, false) => Verdict::HoldsWithinMcError,
    };
    let label = if inc.is_exact() { "max_relative_excess" } else { "max_excess_in_se" };
    Ok(ConditionReport::new(ConditionId::Syg, mode_of(inc))
        .stat("a_hat", a)
        .stat(label, score)
        .verdict(verdict, Some(violation.map_or(Witness::Pair(wk, wl), |(k, l)| Witness::Pair(k, l)))))
}

/// Compares the design variance of the HT estimator with the Hansen-Hurwitz
/// variance under multinomial sampling with the same `π`.
///
/// Poisson, SRS and multinomial sampling use their closed-form variances;
/// the martingale designs use a Monte Carlo variance.
pub fn check_h4c(
    sampler: &Sampler,
    pop: &Population,
    pv: &ProbabilityVector,
    config: &McConfig,
) -> Result<ConditionReport> {
    sampler.check(pop, pv)?;
    let y = pop.y();
    let benchmark = multinomial_variance(pv, y)?;
    let exact = match sampler.design {
        Design::Poisson => Some(poisson_variance(pv, y)?),
        Design::Srswor => Some(var_ht_exact(pv, &exact_inclusion(Design::Srswor, pv)?, y)?),
        Design::Multinomial => Some(benchmark),
        Design::Pivotal | Design::Cube => None,
    };
    let base = |mode| {
        ConditionReport::new(ConditionId::H4c, mode)
            .stat("multinomial_variance", benchmark)
            .stat("bound_middle", bound_h4c(pv, y).unwrap_or(f64::NAN))
            .stat("bound_outer", bound_h4c_outer(pv, y).unwrap_or(f64::NAN))
    };
    let report = match exact {
        Some(v) => {
            let ok = v <= benchmark + EXACT_SLACK * benchmark.abs().max(v.abs()).max(1.0);
            base(EvidenceMode::Exact)
                .stat("design_variance", v)
                .verdict(if ok { Verdict::Holds } else { Verdict::Fails }, Some(Witness::Variable))
        }
        None => {
            config.require_at_least(H4C_MIN_REPLICATES)?;
            let m = mc_moments(sampler, pop, pv, config)?;
            let ok = m.variance_estimate <= benchmark + MC_BAND * m.se_variance;
            base(EvidenceMode::MonteCarlo)
                .stat("design_variance", m.variance_estimate)
                .stat("design_variance_se", m.se_variance)
                .verdict(
                    if ok { Verdict::HoldsWithinMcError } else { Verdict::Fails },
                    Some(Witness::Variable),
                )
        }
    };
    Ok(report)
}
