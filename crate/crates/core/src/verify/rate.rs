use serde::{Deserialize, Serialize};

use super::sequence::PopulationSequence;
use crate::designs::{with_size_constraint, Design, Sampler};
use crate::error::{Error, Result};
use crate::estimators::{multinomial_variance, poisson_variance, var_ht_exact};
use crate::numeric::{self, least_squares, splitmix64};
use crate::oracle::{exact_inclusion, mc_moments, McConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub mc: McConfig,
    /// Use exact variances for Poisson, SRS and multinomial sampling.
    pub prefer_closed_form: bool,
}

impl RateOptions {
    pub fn new(mc: McConfig) -> Self {
        Self {
            mc,
            prefer_closed_form: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(rename = "N")]
    pub population: usize,
    pub n: f64,
    /// `E{N⁻¹ (t̂ − t)}²`.
    pub mse: f64,
    /// Monte Carlo standard error of `mse`, zero for closed forms.
    pub se_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub design: Design,
    pub source: VarianceSource,
    /// Points entering the fit.
    pub points: Vec<RatePoint>,
    /// Points with numerically zero error, excluded from the fit.
    pub degenerate: Vec<RatePoint>,
    /// Least-squares slope of `log mse` against `log n`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_se: Option<f64>,
}

impl RateReport {
    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        self.slope.is_some_and(|s| s >= lo && s <= hi)
    }
}

/// Mean squared error of `N⁻¹ t̂` along a sequence of growing populations,
/// with the slope of its log against `log n`.
pub fn rate_experiment(sampler: &Sampler, seq: &PopulationSequence, options: &RateOptions) -> Result<RateReport> {
    if seq.len() < 4 {
        return Err(Error::InsufficientSpan(format!("{} points", seq.len())));
    }
    let sizes: Vec<f64> = (0..seq.len()).map(|t| seq.expected_size(t)).collect();
    let (lo, hi) = sizes
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), &n| (a.min(n), b.max(n)));
    if hi < 10.0 * lo {
        return Err(Error::InsufficientSpan(format!("n spans {lo}..{hi}")));
    }
    let closed_form = options.prefer_closed_form
        && matches!(sampler.design, Design::Poisson | Design::Srswor | Design::Multinomial);

    let mut points = Vec::new();
    let mut degenerate = Vec::new();
    for t in 0..seq.len() {
        let (pop, pv) = seq.point(t)?;
        let pop = if sampler.design == Design::Cube {
            with_size_constraint(&pop, &pv)?
        } else {
            pop
        };
        let scale = (pop.len() as f64).powi(2);
        let (mse, se) = if closed_form {
            let y = pop.y();
            let v = match sampler.design {
                Design::Poisson => poisson_variance(&pv, y)?,
                Design::Srswor => var_ht_exact(&pv, &exact_inclusion(Design::Srswor, &pv)?, y)?,
                _ => multinomial_variance(&pv, y)?,
            };
            (v, 0.0)
        } else {
            let cfg = McConfig {
                seed: splitmix64(options.mc.seed ^ (t as u64).wrapping_mul(0xA24B_AED4_963E_E407)),
                ..options.mc
            };
            let m = mc_moments(sampler, &pop, &pv, &cfg)?;
            (m.mse, m.se_mse)
        };
        let point = RatePoint {
            population: pop.len(),
            n: pv.n(),
            mse: mse / scale,
            se_mse: se / scale,
        };
        let mean_square = numeric::sum(pop.y().iter().map(|v| v * v)) / pop.len() as f64;
        if point.mse <= 1e-20 * mean_square.max(f64::MIN_POSITIVE) {
            degenerate.push(point);
        } else {
            points.push(point);
        }
    }

    let fit = if points.len() >= 2 {
        let x: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.mse.ln()).collect();
        least_squares(&x, &y)
    } else {
        None
    };
    Ok(RateReport {
        design: sampler.design,
        source: if closed_form {
            VarianceSource::ClosedForm
        } else {
            VarianceSource::MonteCarlo
        },
        points,
        degenerate,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        slope_se: fit.map(|f| f.2),
    })
}
