use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sampler_core::Design;

#[derive(Debug, Parser)]
#[command(name = "sampler", version, about = "Unequal-probability sampling designs and consistency diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one sample, optionally with its martingale trace.
    Sample(SampleArgs),
    /// First- and second-order inclusion probabilities.
    Inclusion(InclusionArgs),
    /// Check consistency conditions and write a JSON report.
    Verify(VerifyArgs),
    /// Fit the decay rate of the mean-square error along a population sequence.
    Rate(RateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub design: Design,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Snapping tolerance of the martingale designs.
    #[arg(long)]
    pub tol_snap: Option<f64>,
    /// Relative rank threshold of the kernel computation.
    #[arg(long)]
    pub tol_rank: Option<f64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PopulationArgs {
    /// Population CSV with a header row. A synthetic population is used when omitted.
    pub population: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub y_col: String,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    /// Column holding the inclusion probabilities.
    #[arg(long)]
    pub pi_col: Option<String>,
    /// Size measure; probabilities are made proportional to it with total `--n`.
    #[arg(long, conflicts_with = "pi_col")]
    pub size_col: Option<String>,
    /// Balancing variables for the cube design, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub aux_cols: Vec<String>,
    /// Expected sample size.
    #[arg(long)]
    pub n: Option<f64>,
    /// Size of the synthetic population.
    #[arg(long = "N")]
    pub population_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateArgs {
    /// Monte Carlo replicates.
    #[arg(long = "R", default_value_t = 10_000)]
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SequencePi {
    Uniform,
    SizeCycle,
}

#[derive(Debug, Clone, Args)]
pub struct SequenceArgs {
    /// Number of populations in the sequence.
    #[arg(long, default_value_t = 6)]
    pub points: usize,
    /// Size of the first population; each next one doubles it.
    #[arg(long, default_value_t = 100)]
    pub base: usize,
    /// Expected sampling fraction.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, value_enum, default_value_t = SequencePi::SizeCycle)]
    pub sequence_pi: SequencePi,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    /// Also write the martingale trace.
    #[arg(long)]
    pub trace: bool,
    /// Trace path; defaults to `<out>.trace.json`, or `trace.json`.
    #[arg(long, requires = "trace")]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InclusionArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub replicates: ReplicateArgs,
    /// Estimate by simulation even when closed forms exist.
    #[arg(long)]
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub replicates: ReplicateArgs,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// Conditions to check: h1, h2, h3, h3b, h4, h4b, h4c, syg, martingale, innovation.
    #[arg(long, value_delimiter = ',', default_value = "h4,h4b,h4c,syg")]
    pub conditions: Vec<String>,
    /// Finite-population ceiling on `n · max |π_kl − π_k π_l|`.
    #[arg(long)]
    pub h4_ceiling: Option<f64>,
    /// Estimate inclusion probabilities by simulation even when closed forms exist.
    #[arg(long)]
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub replicates: ReplicateArgs,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// Simulate even for designs with closed-form variances.
    #[arg(long)]
    pub monte_carlo: bool,
    #[arg(long, default_value_t = -1.25, allow_hyphen_values = true)]
    pub slope_min: f64,
    #[arg(long, default_value_t = -0.75, allow_hyphen_values = true)]
    pub slope_max: f64,
    /// CSV of the fitted points; defaults to `<out>.points.csv`.
    #[arg(long)]
    pub points_out: Option<PathBuf>,
}
