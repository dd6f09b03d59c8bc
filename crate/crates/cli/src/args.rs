use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use frugal_core::eval::bench::Experiment;
use frugal_core::stream::{TraceColumn, TraceTransform};
use frugal_core::{EstimatorKind, QuantileSpec};

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "frugal", version, about = "Frugal streaming quantile estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "kebab-case")]
pub enum Command {
    /// Write a stream, one integer per line.
    Gen(GenArgs),
    /// Feed a stream to estimators and write error trajectories.
    Run(RunArgs),
    /// Run the canned static and dynamic Cauchy experiments.
    Bench(BenchArgs),
    /// Per-key estimates over a key,timestamp,value trace.
    Groupby(GroupbyArgs),
    /// Run the Monte-Carlo property suite.
    Proptest(ProptestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Column {
    #[default]
    Value,
    Timestamp,
}

impl From<Column> for TraceColumn {
    fn from(c: Column) -> Self {
        match c {
            Column::Value => TraceColumn::Value,
            Column::Timestamp => TraceColumn::Timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Raw,
    SuccessiveIntervals,
}

impl From<Transform> for TraceTransform {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Raw => TraceTransform::Raw,
            Transform::SuccessiveIntervals => TraceTransform::SuccessiveIntervals,
        }
    }
}

/// Comma-separated estimator list, e.g. `frugal1u,gk:t=20`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EstimatorList(pub Vec<EstimatorKind>);

impl FromStr for EstimatorList {
    type Err = frugal_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorKind::parse_list(s).map(EstimatorList)
    }
}

impl fmt::Display for EstimatorList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// `static-cauchy`, `dynamic-cauchy` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentChoice {
    All,
    One(Experiment),
}

impl ExperimentChoice {
    pub fn experiments(&self) -> Vec<Experiment> {
        match self {
            ExperimentChoice::All => Experiment::ALL.to_vec(),
            ExperimentChoice::One(e) => vec![*e],
        }
    }
}

impl FromStr for ExperimentChoice {
    type Err = frugal_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            Ok(ExperimentChoice::All)
        } else {
            s.parse().map(ExperimentChoice::One)
        }
    }
}

/// Where the stream comes from. Exactly one of `--spec`, `--spec-file` and
/// `--input` is required.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SourceArgs {
    /// Named stream (ascending, cauchy, uniform, static-cauchy,
    /// dynamic-cauchy) or an inline JSON stream spec.
    #[arg(long, group = "source")]
    pub spec: Option<String>,
    /// JSON stream spec file.
    #[arg(long, group = "source")]
    pub spec_file: Option<PathBuf>,
    /// Trace file: one integer per line, or key,timestamp,value.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
    /// Item count (a cap for traces).
    #[arg(long)]
    pub length: Option<u64>,
    /// Trace column read in raw mode.
    #[arg(long, value_enum, default_value_t)]
    pub column: Column,
    #[arg(long, value_enum, default_value_t)]
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1/2")]
    pub quantile: QuantileSpec,
    #[arg(long, default_value = "frugal1u,frugal2u")]
    pub estimator: EstimatorList,
    /// Record the error every this many items.
    #[arg(long, default_value_t = frugal_core::eval::experiment::DEFAULT_STRIDE)]
    pub stride: u64,
    /// Independent repetitions; synthetic streams are redrawn per run.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, default_value = "all")]
    pub experiment: ExperimentChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GroupbyArgs {
    /// Trace file of key,timestamp,value lines.
    #[arg(long)]
    pub input: PathBuf,
    /// Trace column read in raw mode.
    #[arg(long, value_enum, default_value_t)]
    pub column: Column,
    #[arg(long, value_enum, default_value_t)]
    pub transform: Transform,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1/2")]
    pub quantile: QuantileSpec,
    #[arg(long, default_value = "frugal1u,frugal2u")]
    pub estimator: EstimatorList,
    /// Worker threads; keys are partitioned by hash.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProptestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub runs: u64,
    /// JSON report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn seed_mut(&mut self) -> &mut u64 {
        match self {
            Command::Gen(a) => &mut a.seed,
            Command::Run(a) => &mut a.seed,
            Command::Bench(a) => &mut a.seed,
            Command::Groupby(a) => &mut a.seed,
            Command::Proptest(a) => &mut a.seed,
        }
    }
}
