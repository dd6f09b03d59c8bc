use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use frugal_core::eval::bench::{run_bench, run_stream_seed, write_bench_files, Experiment};
use frugal_core::eval::experiment::{
    run_on_items, write_segment_quantiles_csv, write_summary_json, write_trajectories_csv,
};
use frugal_core::eval::groupby::{build_partitioned, GroupTable};
use frugal_core::eval::oracle::OracleState;
use frugal_core::eval::props::{property_suite, PropertyOutcome, PropertyTestConfig};
use frugal_core::stream::{generate, Source, StreamItem, Trace};
use frugal_core::{Error, Result, StreamSpec};

use crate::args::{BenchArgs, Cli, Command, Format, GenArgs, GroupbyArgs, ProptestArgs, RunArgs, SourceArgs};

pub const SEED_ENV: &str = "FRUGAL_SEED";

/// Written next to every file output so the invocation can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    /// Set when the seed came from the environment rather than `--seed`.
    pub seed_from_env: bool,
    pub config: Cli,
    pub outputs: Vec<PathBuf>,
}

/// What a verb produced: files written and whether it succeeded.
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub passed: bool,
}

impl Outcome {
    fn files(outputs: Vec<PathBuf>) -> Self {
        Outcome { outputs, passed: true }
    }
}

/// Overrides the parsed seed with `FRUGAL_SEED` when set. Returns whether
/// it did.
pub fn apply_seed_env(cli: &mut Cli) -> Result<bool> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer")))?;
            *cli.command.seed_mut() = seed;
            Ok(true)
        }
        Err(std::env::VarError::NotPresent) => Ok(false),
        Err(e) => Err(Error::Config(format!("{SEED_ENV}: {e}"))),
    }
}

pub fn dispatch(cli: &Cli, argv: &[String], seed_from_env: bool) -> Result<Outcome> {
    let outcome = match &cli.command {
        Command::Gen(a) => gen(a)?,
        Command::Run(a) => run(a)?,
        Command::Bench(a) => bench(a)?,
        Command::Groupby(a) => groupby(a)?,
        Command::Proptest(a) => proptest(a)?,
    };
    if let Some(path) = manifest_path(&cli.command) {
        let manifest = Manifest {
            tool: "frugal".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: argv.to_vec(),
            seed_from_env,
            config: cli.clone(),
            outputs: outcome.outputs.clone(),
        };
        let mut out = BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(outcome)
}

/// `<out>.manifest.json` for file outputs, `manifest.json` inside the bench
/// directory; nothing when writing to stdout.
pub fn manifest_path(cmd: &Command) -> Option<PathBuf> {
    let beside = |p: &Option<PathBuf>| {
        p.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    };
    match cmd {
        Command::Gen(a) => beside(&a.out),
        Command::Run(a) => beside(&a.out),
        Command::Bench(a) => Some(a.out.join("manifest.json")),
        Command::Groupby(a) => beside(&a.out),
        Command::Proptest(a) => beside(&a.out),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.to_path_buf().into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Resolves `--spec`, `--spec-file` or `--input` into a validated spec.
/// Named streams take `seed`; JSON specs carry their own.
pub fn resolve_stream(src: &SourceArgs, seed: u64) -> Result<StreamSpec> {
    let mut spec = match (&src.spec, &src.spec_file, &src.input) {
        (Some(s), None, None) if s.trim_start().starts_with('{') => StreamSpec::from_json(s)?,
        (Some(s), None, None) => named_stream(s, src.length, seed)?,
        (None, Some(p), None) => StreamSpec::from_json(&fs::read_to_string(p)?)?,
        (None, None, Some(p)) => StreamSpec {
            source: Source::Trace {
                path: p.clone(),
                column: src.column.into(),
                transform: src.transform.into(),
            },
            length: None,
            seed,
            label: None,
        },
        (None, None, None) => {
            return Err(Error::Config(
                "one of --spec, --spec-file or --input is required".into(),
            ));
        }
        _ => return Err(Error::Config("--spec, --spec-file and --input are exclusive".into())),
    };
    if let Some(n) = src.length {
        if matches!(spec.source, Source::Piecewise { .. }) {
            return Err(Error::Config("--length cannot resize a piecewise stream".into()));
        }
        spec.length = Some(n);
    }
    spec.validate()?;
    Ok(spec)
}

fn named_stream(name: &str, length: Option<u64>, seed: u64) -> Result<StreamSpec> {
    let need = || length.ok_or_else(|| Error::Config(format!("--spec {name} needs --length")));
    Ok(match name {
        "ascending" => StreamSpec::ascending(need()?),
        "cauchy" => StreamSpec::cauchy(10_000.0, 1_250.0, need()?, seed),
        "uniform" => StreamSpec::uniform(1, 1000, need()?, seed),
        other => match other.parse::<Experiment>() {
            Ok(e) => e.stream(seed),
            Err(_) => {
                return Err(Error::StreamSpec(format!(
                "unknown stream {other:?} (expected ascending, cauchy, uniform, static-cauchy, dynamic-cauchy or JSON)"
            )))
            }
        },
    })
}

fn gen(a: &GenArgs) -> Result<Outcome> {
    let spec = resolve_stream(&a.source, a.seed)?;
    let items = generate(&spec)?;
    let mut out = sink(&a.out)?;
    match a.format {
        Format::Csv => frugal_core::stream::write_values(&mut out, &items)?,
        Format::Json => {
            let values: Vec<i64> = items.iter().map(|i| i.value).collect();
            serde_json::to_writer(&mut out, &values)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(Outcome::files(a.out.iter().cloned().collect()))
}

fn run(a: &RunArgs) -> Result<Outcome> {
    if a.runs == 0 {
        return Err(Error::Config("--runs must be >= 1".into()));
    }
    let spec = resolve_stream(&a.source, a.seed)?;
    let trace = matches!(spec.source, Source::Trace { .. });
    let mut trajectories = Vec::new();
    let mut segment_quantiles = Vec::new();
    let mut cached: Option<Vec<StreamItem>> = None;
    for r in 0..a.runs {
        let spec_r = if trace {
            spec.clone()
        } else {
            StreamSpec {
                seed: run_stream_seed(spec.seed, r),
                ..spec.clone()
            }
        };
        let items = match (&cached, trace) {
            (Some(items), true) => items.clone(),
            _ => generate(&spec_r)?,
        };
        let segments = if trace {
            std::iter::once(0..items.len() as u64).collect()
        } else {
            spec_r.segment_bounds()
        };
        let res = run_on_items(&items, &segments, &a.estimator.0, a.quantile, a.stride, a.seed, r)?;
        trajectories.extend(res.trajectories);
        if r == 0 {
            segment_quantiles = res.segment_quantiles;
        }
        if trace {
            cached = Some(items);
        }
    }
    let mut outputs: Vec<PathBuf> = a.out.iter().cloned().collect();
    let mut out = sink(&a.out)?;
    match a.format {
        Format::Csv => write_trajectories_csv(&mut out, &trajectories, true)?,
        Format::Json => write_summary_json(&mut out, &trajectories)?,
    }
    if let (Some(p), false) = (&a.out, segment_quantiles.is_empty()) {
        let path = with_suffix(p, ".use-distrib.csv");
        write_segment_quantiles_csv(BufWriter::new(fs::File::create(&path)?), &segment_quantiles, true)?;
        outputs.push(path);
    }
    Ok(Outcome::files(outputs))
}

fn bench(a: &BenchArgs) -> Result<Outcome> {
    let mut outputs = Vec::new();
    for e in a.experiment.experiments() {
        let res = run_bench(e, a.seed, a.runs)?;
        outputs.extend(write_bench_files(&a.out, &res)?);
    }
    for p in &outputs {
        eprintln!("wrote {}", p.display());
    }
    Ok(Outcome::files(outputs))
}

/// One output row of `groupby`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub key: String,
    pub estimator: String,
    pub quantile: String,
    pub count: u64,
    pub estimate: i64,
    pub true_quantile: i64,
    pub mass_error: f64,
    pub memory_units: u64,
}

pub const GROUPBY_HEADER: &str = "key,estimator,quantile,count,estimate,true_quantile,mass_error,memory_units";

fn groupby(a: &GroupbyArgs) -> Result<Outcome> {
    let trace = Trace::read(&a.input)?;
    if trace.skipped > 0 {
        eprintln!("skipped {} unparsable lines", trace.skipped);
    }
    let records = trace.keyed_values(a.column.into(), a.transform.into());

    let mut oracles: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for &(k, v) in &records {
        oracles.entry(k).or_default().push(v);
    }
    let oracles: BTreeMap<&str, OracleState> = oracles
        .into_iter()
        .map(|(k, vs)| (k, OracleState::from_values(vs)))
        .collect();

    let tables: Vec<GroupTable> = a
        .estimator
        .0
        .iter()
        .map(|&kind| build_partitioned(&records, kind, a.quantile, a.seed, None, a.threads))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (key, oracle) in &oracles {
        let truth = oracle.quantile(a.quantile)?;
        for table in &tables {
            let Some(group) = table.get(key) else { continue };
            let Some(estimate) = group.estimator.estimate() else {
                continue;
            };
            rows.push(GroupRow {
                key: key.to_string(),
                estimator: table.kind().to_string(),
                quantile: a.quantile.to_string(),
                count: group.count,
                estimate,
                true_quantile: truth,
                mass_error: oracle.mass_error(estimate, a.quantile)?,
                memory_units: group.estimator.memory().units,
            });
        }
    }
    for table in &tables {
        let mem = table.memory();
        eprintln!(
            "{}: {} groups, {} memory units (+{} bits)",
            table.kind(),
            table.len(),
            mem.units,
            mem.extra_bits
        );
    }

    let mut out = sink(&a.out)?;
    match a.format {
        Format::Csv => {
            writeln!(out, "{GROUPBY_HEADER}")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{:.9},{}",
                    r.key, r.estimator, r.quantile, r.count, r.estimate, r.true_quantile, r.mass_error, r.memory_units
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(Outcome::files(a.out.iter().cloned().collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProptestReport {
    pub config: PropertyTestConfig,
    pub outcomes: Vec<PropertyOutcome>,
    pub passed: bool,
}

fn proptest(a: &ProptestArgs) -> Result<Outcome> {
    let config = PropertyTestConfig {
        seed: a.seed,
        runs: a.runs,
        ..Default::default()
    };
    let outcomes = property_suite(&config)?;
    for o in &outcomes {
        eprintln!(
            "{} {}: {}/{} runs failed (rate {:.3}, max {:.3})",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.failures,
            o.runs,
            o.failure_rate,
            o.max_failure_rate
        );
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let report = ProptestReport {
        config,
        outcomes,
        passed,
    };
    let mut out = sink(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(Outcome {
        outputs: a.out.iter().cloned().collect(),
        passed,
    })
}
