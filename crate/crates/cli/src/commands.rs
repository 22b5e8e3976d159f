use std::path::PathBuf;

use serde::Serialize;

use sampler_core::designs::Tolerances;
use sampler_core::estimators::ht_estimate;
use sampler_core::oracle::{exact_inclusion, map_replicate_chunks, mc_inclusion, McConfig};
use sampler_core::verify::{
    check_h1_h3, check_h4, check_h4b, check_h4c, check_martingale, check_syg, rate_experiment, ConditionId,
    ConditionReport, InnovationAccumulator, MartingaleSummary, PiScheme, PopulationSequence, RateOptions,
    RatePoint, RateReport, Thresholds, INNOVATION_MIN_TRACES,
};
use sampler_core::{Design, InclusionMatrix, MartingaleTrace, Population, ProbabilityVector, RandomStream, Sampler};

use crate::args::{DesignArgs, InclusionArgs, RateArgs, SampleArgs, SequenceArgs, SequencePi, VerifyArgs};
use crate::failure::{Failure, Outcome, EXIT_OK, EXIT_VERDICT};
use crate::input::{self, Loaded};
use crate::report::{emit, render, sibling, RunConfig, SequenceConfig};

/// Worker count from `SAMPLER_THREADS`; results never depend on it.
pub fn threads() -> Outcome<Option<usize>> {
    match std::env::var("SAMPLER_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Failure::config(format!("SAMPLER_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn mc_config(replicates: usize, seed: u64) -> Outcome<McConfig> {
    let cfg = McConfig::new(replicates, seed);
    Ok(match threads()? {
        Some(t) => cfg.with_threads(t),
        None => cfg,
    })
}

fn tolerances(args: &DesignArgs) -> Outcome<Tolerances> {
    let mut tol = Tolerances::default();
    for (value, slot, name) in [(args.tol_snap, &mut tol.snap, "--tol-snap"), (args.tol_rank, &mut tol.rank, "--tol-rank")] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0 && v < 0.5) {
                return Err(Failure::config(format!("{name} must lie in (0, 0.5), got {v}")));
            }
            *slot = v;
        }
    }
    Ok(tol)
}

fn sequence(args: &SequenceArgs) -> (PopulationSequence, SequenceConfig) {
    let seq = PopulationSequence::geometric(args.base, args.points, args.fraction).with_pi(match args.sequence_pi {
        SequencePi::Uniform => PiScheme::Uniform,
        SequencePi::SizeCycle => PiScheme::SizeCycle,
    });
    let described = SequenceConfig {
        sizes: seq.sizes.clone(),
        fraction: seq.fraction,
        pi: format!("{:?}", args.sequence_pi).to_lowercase().replace("sizecycle", "size-cycle"),
        y: "bounded".into(),
    };
    (seq, described)
}

#[derive(Serialize)]
struct Selected<'a> {
    id: &'a str,
    count: u32,
}

#[derive(Serialize)]
struct SampleResult<'a> {
    size: u64,
    estimate: f64,
    selected: Vec<Selected<'a>>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    max_units_per_step: Option<usize>,
}

pub fn sample(args: &SampleArgs) -> Outcome<i32> {
    let tol = tolerances(&args.design)?;
    let design = args.design.design;
    if args.trace && !design.is_martingale() {
        return Err(Failure::config(format!("--trace needs a martingale design (pivotal or cube), not {design}")));
    }
    let Loaded { population, probabilities, described } = input::load(&args.population, design)?;
    let sampler = Sampler::new(design).with_tolerances(tol);
    sampler.check(&population, &probabilities)?;
    let mut rng = RandomStream::new(args.design.seed, 0);
    let (counts, trace) = sampler.draw_traced(&population, &probabilities, &mut rng)?;

    let mut config = RunConfig::new("sample", design, args.design.seed, tol);
    config.population = Some(described);
    config.trace = args.trace;
    let result = SampleResult {
        size: counts.size(),
        estimate: ht_estimate(population.y(), &probabilities, &counts).estimate,
        selected: counts
            .selected()
            .map(|k| Selected { id: &population.ids()[k], count: counts.0[k] })
            .collect(),
        steps: trace.as_ref().map(|t| t.t),
        max_units_per_step: trace.as_ref().map(|t| t.c),
    };
    emit(args.design.out.as_deref(), &render(&config, &result)?)?;

    if args.trace {
        let trace: MartingaleTrace = trace.ok_or_else(|| Failure::internal("design returned no trace"))?;
        let path = args.trace_out.clone().unwrap_or_else(|| match &args.design.out {
            Some(out) => sibling(out, "trace.json"),
            None => PathBuf::from("trace.json"),
        });
        emit(Some(&path), &render(&config, &trace)?)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct InclusionResult<'a> {
    ids: &'a [String],
    exact: bool,
    inclusion: &'a InclusionMatrix,
}

fn inclusion_matrix(
    sampler: &Sampler,
    population: &Population,
    probabilities: &ProbabilityVector,
    monte_carlo: bool,
    mc: &McConfig,
) -> Outcome<InclusionMatrix> {
    let closed = matches!(sampler.design, Design::Poisson | Design::Srswor | Design::Multinomial);
    if closed && !monte_carlo {
        sampler.check(population, probabilities)?;
        Ok(exact_inclusion(sampler.design, probabilities)?)
    } else {
        Ok(mc_inclusion(sampler, population, probabilities, mc)?)
    }
}

pub fn inclusion(args: &InclusionArgs) -> Outcome<i32> {
    let tol = tolerances(&args.design)?;
    let design = args.design.design;
    let Loaded { population, probabilities, described } = input::load(&args.population, design)?;
    let sampler = Sampler::new(design).with_tolerances(tol);
    let mc = mc_config(args.replicates.replicates, args.design.seed)?;
    let matrix = inclusion_matrix(&sampler, &population, &probabilities, args.monte_carlo, &mc)?;

    let mut config = RunConfig::new("inclusion", design, args.design.seed, tol);
    config.population = Some(described);
    config.monte_carlo = args.monte_carlo;
    config.replicates = (!matrix.is_exact()).then_some(mc.replicates);
    let result = InclusionResult { ids: population.ids(), exact: matrix.is_exact(), inclusion: &matrix };
    emit(args.design.out.as_deref(), &render(&config, &result)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyResult {
    all_hold: bool,
    reports: Vec<ConditionReport>,
}

/// Per-trace martingale checks and the innovation decomposition in one pass.
fn martingale_pass(
    sampler: &Sampler,
    population: &Population,
    probabilities: &ProbabilityVector,
    mc: &McConfig,
    want: (bool, bool),
) -> Outcome<(ConditionReport, ConditionReport)> {
    let q = if sampler.design == Design::Cube { population.q() } else { 1 };
    let parts = map_replicate_chunks(mc, |range| {
        let mut summary = MartingaleSummary::new();
        let mut innovation = InnovationAccumulator::new(probabilities);
        for r in range {
            let (_, trace) = sampler.draw_traced(population, probabilities, &mut mc.stream(r))?;
            let trace = trace.expect("martingale designs return traces");
            if want.0 {
                summary.add(r as usize, &check_martingale(&trace, probabilities, q)?);
            }
            if want.1 {
                innovation.add(&trace);
            }
        }
        Ok((summary, innovation))
    })?;
    let mut summary = MartingaleSummary::new();
    let mut innovation = InnovationAccumulator::new(probabilities);
    for (s, i) in &parts {
        summary.merge(s);
        innovation.merge(i);
    }
    Ok((summary.finish(), innovation.finish()))
}

pub fn verify(args: &VerifyArgs) -> Outcome<i32> {
    let tol = tolerances(&args.design)?;
    let design = args.design.design;
    let mut wanted: Vec<ConditionId> = Vec::new();
    for name in &args.conditions {
        let id = ConditionId::parse(name.trim())
            .ok_or_else(|| Failure::config(format!("unknown condition `{name}`")))?;
        if !wanted.contains(&id) {
            wanted.push(id);
        }
    }
    let Loaded { population, probabilities, described } = input::load(&args.population, design)?;
    let sampler = Sampler::new(design).with_tolerances(tol);
    sampler.check(&population, &probabilities)?;
    let mc = mc_config(args.replicates.replicates, args.design.seed)?;
    let (seq, seq_config) = sequence(&args.sequence);

    let needs = |ids: &[ConditionId]| wanted.iter().any(|w| ids.contains(w));
    let mut used_mc = false;
    let mut reports: Vec<(ConditionId, ConditionReport)> = Vec::new();

    if needs(&[ConditionId::H1, ConditionId::H2, ConditionId::H3, ConditionId::H3b]) {
        for r in check_h1_h3(&seq, &Thresholds::default())? {
            reports.push((r.condition, r));
        }
    }
    if needs(&[ConditionId::H4, ConditionId::H4b, ConditionId::Syg]) {
        let matrix = inclusion_matrix(&sampler, &population, &probabilities, args.monte_carlo, &mc)?;
        used_mc |= !matrix.is_exact();
        reports.push((ConditionId::H4, check_h4(&matrix, &probabilities, args.h4_ceiling)?));
        reports.push((ConditionId::H4b, check_h4b(&matrix, &probabilities)?));
        reports.push((ConditionId::Syg, check_syg(&matrix, &probabilities)?));
    }
    if needs(&[ConditionId::H4c]) {
        let r = check_h4c(&sampler, &population, &probabilities, &mc)?;
        used_mc |= r.mode == sampler_core::verify::EvidenceMode::MonteCarlo;
        reports.push((ConditionId::H4c, r));
    }
    let want_martingale = needs(&[ConditionId::Martingale]);
    let want_innovation = needs(&[ConditionId::Innovation]);
    if want_martingale || want_innovation {
        if !design.is_martingale() {
            return Err(Failure::config(format!(
                "martingale and innovation checks need the pivotal or cube design, not {design}"
            )));
        }
        if want_innovation {
            mc.require_at_least(INNOVATION_MIN_TRACES)?;
        }
        let (m, i) = martingale_pass(&sampler, &population, &probabilities, &mc, (want_martingale, want_innovation))?;
        used_mc = true;
        reports.push((ConditionId::Martingale, m));
        reports.push((ConditionId::Innovation, i));
    }

    let reports: Vec<ConditionReport> = wanted
        .iter()
        .filter_map(|w| reports.iter().find(|(id, _)| id == w).map(|(_, r)| r.clone()))
        .collect();
    let all_hold = reports.iter().all(|r| !r.verdict.is_failure());

    let mut config = RunConfig::new("verify", design, args.design.seed, tol);
    config.population = Some(described);
    if needs(&[ConditionId::H1, ConditionId::H2, ConditionId::H3, ConditionId::H3b]) {
        config.sequence = Some(seq_config);
    }
    config.conditions = Some(args.conditions.iter().map(|c| c.trim().to_ascii_lowercase()).collect());
    config.h4_ceiling = args.h4_ceiling;
    config.monte_carlo = args.monte_carlo;
    config.replicates = used_mc.then_some(mc.replicates);
    emit(args.design.out.as_deref(), &render(&config, &VerifyResult { all_hold, reports })?)?;
    Ok(if all_hold { EXIT_OK } else { EXIT_VERDICT })
}

#[derive(Serialize)]
struct RateResult<'a> {
    within_window: bool,
    report: &'a RateReport,
}

fn points_csv(report: &RateReport) -> Outcome<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| Failure::internal(e.to_string());
    writer.write_record(["N", "n", "mse", "se_mse", "fitted"]).map_err(bad)?;
    let rows = report.points.iter().map(|p| (p, true)).chain(report.degenerate.iter().map(|p| (p, false)));
    let mut rows: Vec<(&RatePoint, bool)> = rows.collect();
    rows.sort_by_key(|(p, _)| p.population);
    for (p, fitted) in rows {
        writer
            .write_record([
                p.population.to_string(),
                crate::json::format_g17(p.n),
                crate::json::format_g17(p.mse),
                crate::json::format_g17(p.se_mse),
                fitted.to_string(),
            ])
            .map_err(bad)?;
    }
    writer.into_inner().map_err(|e| Failure::internal(e.to_string()))
}

pub fn rate(args: &RateArgs) -> Outcome<i32> {
    let tol = tolerances(&args.design)?;
    let design = args.design.design;
    if args.slope_min > args.slope_max {
        return Err(Failure::config("--slope-min exceeds --slope-max"));
    }
    let (seq, seq_config) = sequence(&args.sequence);
    let sampler = Sampler::new(design).with_tolerances(tol);
    let mc = mc_config(args.replicates.replicates, args.design.seed)?;
    let mut options = RateOptions::new(mc);
    options.prefer_closed_form = !args.monte_carlo;
    let report = rate_experiment(&sampler, &seq, &options)?;
    let within = report.slope_within(args.slope_min, args.slope_max);

    let mut config = RunConfig::new("rate", design, args.design.seed, tol);
    config.sequence = Some(seq_config);
    config.slope_window = Some([args.slope_min, args.slope_max]);
    config.monte_carlo = args.monte_carlo;
    config.replicates = (report.source == sampler_core::verify::VarianceSource::MonteCarlo).then_some(mc.replicates);
    emit(args.design.out.as_deref(), &render(&config, &RateResult { within_window: within, report: &report })?)?;

    let points_path = args
        .points_out
        .clone()
        .or_else(|| args.design.out.as_ref().map(|o| sibling(o, "points.csv")));
    if let Some(path) = points_path {
        emit(Some(&path), &points_csv(&report)?)?;
    }
    Ok(if within { EXIT_OK } else { EXIT_VERDICT })
}
