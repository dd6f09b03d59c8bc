//! Canned convergence experiments on Cauchy streams.
//!
//! `static-cauchy` feeds one Cauchy(10000, 1250) stream of 30000 items to the
//! frugal estimators and the three baselines. `dynamic-cauchy` concatenates
//! three Cauchy segments whose central 98% mass covers the windows
//! [10000,15000], [15000,20000] and [20000,25000]; those location/scale pairs
//! are stand-ins and are labeled as such in every output.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorKind;
use crate::eval::experiment::{
    run_on_items, write_segment_quantiles_csv, write_summary_json, write_trajectories_csv, SegmentQuantile, Trajectory,
    DEFAULT_STRIDE,
};
use crate::quantile::QuantileSpec;
use crate::rng::derive_seed;
use crate::stream::{generate, StreamSpec};

pub const STATIC_LOCATION: f64 = 10_000.0;
pub const STATIC_SCALE: f64 = 1_250.0;
pub const STATIC_LENGTH: u64 = 30_000;

pub const DYNAMIC_WINDOWS: [(i64, i64); 3] = [(10_000, 15_000), (15_000, 20_000), (20_000, 25_000)];
pub const DYNAMIC_SEGMENT_LENGTH: u64 = 20_000;
/// Central mass of each dynamic segment that falls inside its window.
pub const DYNAMIC_WINDOW_MASS: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    StaticCauchy,
    DynamicCauchy,
}

impl Experiment {
    pub const ALL: [Experiment; 2] = [Experiment::StaticCauchy, Experiment::DynamicCauchy];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::StaticCauchy => "static-cauchy",
            Experiment::DynamicCauchy => "dynamic-cauchy",
        }
    }

    pub fn stream(&self, seed: u64) -> StreamSpec {
        match self {
            Experiment::StaticCauchy => static_cauchy_spec(seed),
            Experiment::DynamicCauchy => dynamic_cauchy_spec(seed, DYNAMIC_SEGMENT_LENGTH),
        }
    }

    /// Only the frugal estimators are meant to track a changing distribution.
    pub fn estimators(&self) -> Vec<EstimatorKind> {
        let list = match self {
            Experiment::StaticCauchy => "frugal1u,frugal2u,gk:t=20,qdigest:b=20,selection",
            Experiment::DynamicCauchy => "frugal1u,frugal2u",
        };
        EstimatorKind::parse_list(list).expect("canned estimator list parses")
    }

    pub fn quantiles(&self) -> [QuantileSpec; 2] {
        [QuantileSpec::median(), QuantileSpec::new(9, 10).expect("9/10 is valid")]
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown experiment {s:?} (expected static-cauchy or dynamic-cauchy)"
            ))
        })
    }
}

pub fn static_cauchy_spec(seed: u64) -> StreamSpec {
    StreamSpec::cauchy(STATIC_LOCATION, STATIC_SCALE, STATIC_LENGTH, seed).with_label("static-cauchy")
}

/// Location and scale of a Cauchy whose central `mass` lies in `[lo, hi]`.
pub fn window_cauchy(lo: i64, hi: i64, mass: f64) -> (f64, f64) {
    let location = (lo + hi) as f64 / 2.0;
    let half = (hi - lo) as f64 / 2.0;
    (location, half / (std::f64::consts::FRAC_PI_2 * mass).tan())
}

pub fn dynamic_cauchy_spec(seed: u64, segment_length: u64) -> StreamSpec {
    let segments = DYNAMIC_WINDOWS
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let (location, scale) = window_cauchy(lo, hi, DYNAMIC_WINDOW_MASS);
            StreamSpec::cauchy(location, scale, segment_length, i as u64 + 1)
                .with_label(format!("stand-in cauchy window [{lo},{hi}]"))
        })
        .collect();
    StreamSpec::piecewise(segments, seed).with_label("dynamic-cauchy (stand-in segment parameters)")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub experiment: Experiment,
    pub streams: Vec<StreamSpec>,
    pub trajectories: Vec<Trajectory>,
    pub segment_quantiles: Vec<SegmentQuantile>,
}

/// Stream seed of run `run`; run 0 uses `seed` itself so a single-run bench
/// replays `gen` output for the same seed.
pub fn run_stream_seed(seed: u64, run: u64) -> u64 {
    if run == 0 {
        seed
    } else {
        derive_seed(seed, run)
    }
}

pub fn run_bench(experiment: Experiment, seed: u64, runs: u64) -> Result<BenchOutput> {
    if runs == 0 {
        return Err(Error::Config("runs must be >= 1".into()));
    }
    let kinds = experiment.estimators();
    let mut out = BenchOutput {
        experiment,
        streams: Vec::new(),
        trajectories: Vec::new(),
        segment_quantiles: Vec::new(),
    };
    for run in 0..runs {
        let spec = experiment.stream(run_stream_seed(seed, run));
        let items = generate(&spec)?;
        let segments = spec.segment_bounds();
        for q in experiment.quantiles() {
            let res = run_on_items(&items, &segments, &kinds, q, DEFAULT_STRIDE, seed, run)?;
            out.trajectories.extend(res.trajectories);
            if run == 0 {
                out.segment_quantiles.extend(res.segment_quantiles);
            }
        }
        out.streams.push(spec);
    }
    Ok(out)
}

/// Writes `<name>.csv`, `<name>.summary.json` and, for piecewise streams,
/// `<name>.use-distrib.csv` into `dir`. Returns the paths written.
pub fn write_bench_files(dir: &Path, out: &BenchOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = out.experiment.name();
    let mut written = Vec::new();

    let path = dir.join(format!("{name}.csv"));
    write_trajectories_csv(BufWriter::new(fs::File::create(&path)?), &out.trajectories, true)?;
    written.push(path);

    let path = dir.join(format!("{name}.summary.json"));
    write_summary_json(BufWriter::new(fs::File::create(&path)?), &out.trajectories)?;
    written.push(path);

    if !out.segment_quantiles.is_empty() {
        let path = dir.join(format!("{name}.use-distrib.csv"));
        write_segment_quantiles_csv(BufWriter::new(fs::File::create(&path)?), &out.segment_quantiles, true)?;
        written.push(path);
    }
    Ok(written)
}
