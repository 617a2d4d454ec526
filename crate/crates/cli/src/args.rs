use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metaudit_core::pooling::PoolingModel;
use metaudit_core::pplot::Thresholds;
use metaudit_core::Scale;
use serde::Serialize;

/// Audit the base studies of a meta-analysis of observational studies.
#[derive(Debug, Parser)]
#[command(name = "metaudit", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct SE, z, p and rank for every study.
    Compute(ComputeArgs),
    /// P-value plot with fits, uniformity test, gaps and a verdict.
    Pplot(PplotArgs),
    /// Volcano plot with nominal and Bonferroni lines.
    Volcano(VolcanoArgs),
    /// Inverse-variance pooling, heterogeneity and Egger's test.
    Pool(PoolArgs),
    /// Seeded simulations of meta-analyses with no true effects.
    Simulate(SimulateArgs),
    /// Everything above, in one report.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Fixed,
    RandomDl,
}

impl From<ModelArg> for PoolingModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Fixed => PoolingModel::FixedEffect,
            ModelArg::RandomDl => PoolingModel::DersimonianLaird,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Study table (CSV, or TSV when the header contains a tab).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub cl: f64,
    /// Null value of the effect measure.
    #[arg(long = "null", default_value_t = 1.0)]
    pub null_value: f64,
    /// Scale on which intervals are treated as symmetric.
    #[arg(long, value_enum, default_value_t = ScaleArg::Linear)]
    pub scale: ScaleArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Write result files and a manifest into this directory instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = Thresholds::default().bilinear_alpha)]
    pub bilinear_alpha: f64,
    /// Accept concave curvature as bilinear.
    #[arg(long)]
    pub allow_concave: bool,
    #[arg(long, default_value_t = Thresholds::default().blade_p)]
    pub blade_p: f64,
    #[arg(long, default_value_t = Thresholds::default().handle_p)]
    pub handle_p: f64,
    #[arg(long, default_value_t = Thresholds::default().ks_alpha)]
    pub ks_alpha: f64,
    #[arg(long, default_value_t = Thresholds::default().random_alpha)]
    pub random_alpha: f64,
    #[arg(long, default_value_t = Thresholds::default().effect_p)]
    pub effect_p: f64,
    /// Flag gaps wider than this many mean uniform spacings.
    #[arg(long, default_value_t = Thresholds::default().gap_factor)]
    pub gap_factor: f64,
}

impl ThresholdArgs {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            bilinear_alpha: self.bilinear_alpha,
            require_convex: !self.allow_concave,
            blade_p: self.blade_p,
            handle_p: self.handle_p,
            ks_alpha: self.ks_alpha,
            random_alpha: self.random_alpha,
            effect_p: self.effect_p,
            gap_factor: self.gap_factor,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolcanoOptions {
    /// Significance level before correction.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Size of the family for the Bonferroni line (default: number of studies).
    #[arg(long)]
    pub m_tests: Option<usize>,
    /// Half-width of the window around the null checked for a gap.
    #[arg(long, default_value_t = 0.05)]
    pub window: f64,
    /// Log-scale effect axis.
    #[arg(long)]
    pub log_x: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulationOptions {
    /// Seed for the random number generator.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Replication panels drawn in the grid.
    #[arg(long, default_value_t = 12)]
    pub panels: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PplotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolcanoArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub volcano: VolcanoOptions,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PoolArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Fixed)]
    pub model: ModelArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Studies per simulated meta-analysis.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[command(flatten)]
    pub sim: SimulationOptions,
    /// Also write the first --panels replications as study tables (needs --out).
    #[arg(long)]
    pub export_series: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub volcano: VolcanoOptions,
    #[arg(long, value_enum, default_value_t = ModelArg::Fixed)]
    pub model: ModelArg,
    /// Null replications at the table's size (0 skips the simulation).
    #[arg(long, default_value_t = 1000)]
    pub sim_reps: usize,
    #[command(flatten)]
    pub sim: SimulationOptions,
    #[command(flatten)]
    pub out: OutArgs,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Compute(_) => "compute",
            Command::Pplot(_) => "pplot",
            Command::Volcano(_) => "volcano",
            Command::Pool(_) => "pool",
            Command::Simulate(_) => "simulate",
            Command::Audit(_) => "audit",
        }
    }

    pub fn out_dir(&self) -> Option<&PathBuf> {
        match self {
            Command::Compute(a) => a.out.out.as_ref(),
            Command::Pplot(a) => a.out.out.as_ref(),
            Command::Volcano(a) => a.out.out.as_ref(),
            Command::Pool(a) => a.out.out.as_ref(),
            Command::Simulate(a) => a.out.out.as_ref(),
            Command::Audit(a) => a.out.out.as_ref(),
        }
    }

    /// Every parsed option, defaults included, for the run manifest.
    pub fn parameters(&self) -> serde_json::Value {
        let v = match self {
            Command::Compute(a) => serde_json::to_value(a),
            Command::Pplot(a) => serde_json::to_value(a),
            Command::Volcano(a) => serde_json::to_value(a),
            Command::Pool(a) => serde_json::to_value(a),
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Audit(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}
