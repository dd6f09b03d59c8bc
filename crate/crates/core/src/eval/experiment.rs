//! Runs estimators side by side over one stream and scores them against the
//! cumulative exact oracle.

use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorKind, ValueRange};
use crate::eval::oracle::{OracleState, PrefixOracle};
use crate::quantile::QuantileSpec;
use crate::rng::derive_seed;
use crate::stream::{generate, StreamItem, StreamSpec};

pub const DEFAULT_STRIDE: u64 = 100;

pub const TRAJECTORY_HEADER: &str = "run,estimator,quantile,index,estimate,true_quantile,mass_error";

/// Estimate quality after `index` items have been consumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub index: u64,
    pub estimate: i64,
    pub true_quantile: i64,
    pub mass_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub run: u64,
    pub estimator: EstimatorKind,
    pub quantile: QuantileSpec,
    pub records: Vec<ErrorRecord>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&ErrorRecord> {
        self.records.last()
    }
}

/// Per-segment true quantile, the reference a change-tracking estimator
/// should follow on a piecewise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentQuantile {
    pub index: u64,
    pub segment: usize,
    pub quantile: QuantileSpec,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub stream: StreamSpec,
    pub estimators: Vec<EstimatorKind>,
    pub quantile: QuantileSpec,
    pub stride: u64,
    /// Base seed for the estimators' random sources.
    pub seed: u64,
    pub run: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trajectories: Vec<Trajectory>,
    pub segment_quantiles: Vec<SegmentQuantile>,
}

/// Seed of the estimator in `slot` for a given run.
pub fn estimator_seed(seed: u64, run: u64, slot: usize) -> u64 {
    derive_seed(derive_seed(seed, run), slot as u64)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let items = generate(&cfg.stream)?;
    let segments = cfg.stream.segment_bounds();
    run_on_items(
        &items,
        &segments,
        &cfg.estimators,
        cfg.quantile,
        cfg.stride,
        cfg.seed,
        cfg.run,
    )
}

/// Feeds every item to every estimator and records errors every `stride`
/// items and at the final item. `segments` delimits sub-distributions; with
/// more than one segment the per-segment quantile series is produced too.
pub fn run_on_items(
    items: &[StreamItem],
    segments: &[Range<u64>],
    kinds: &[EstimatorKind],
    quantile: QuantileSpec,
    stride: u64,
    seed: u64,
    run: u64,
) -> Result<ExperimentOutput> {
    if kinds.is_empty() {
        return Err(Error::Config("no estimators given".into()));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    if items.is_empty() {
        return Err(Error::Config("empty stream".into()));
    }
    let values: Vec<i64> = items.iter().map(|i| i.value).collect();
    let range = ValueRange::of(values.iter().copied());
    let mut estimators = kinds
        .iter()
        .enumerate()
        .map(|(slot, &kind)| Estimator::new(kind, quantile, estimator_seed(seed, run, slot), range))
        .collect::<Result<Vec<_>>>()?;
    let mut trajectories: Vec<Trajectory> = kinds
        .iter()
        .map(|&estimator| Trajectory {
            run,
            estimator,
            quantile,
            records: Vec::with_capacity(values.len() / stride as usize + 1),
        })
        .collect();

    let segment_values: Vec<i64> = if segments.len() > 1 {
        segments
            .iter()
            .map(|r| {
                OracleState::from_values(values[r.start as usize..r.end as usize].iter().copied()).quantile(quantile)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut segment_quantiles = Vec::new();

    let mut oracle = PrefixOracle::new(&values);
    let n = values.len() as u64;
    for (i, &v) in values.iter().enumerate() {
        oracle.advance();
        for e in estimators.iter_mut() {
            e.observe(v)?;
        }
        let consumed = i as u64 + 1;
        if consumed.is_multiple_of(stride) || consumed == n {
            let truth = oracle.quantile(quantile)?;
            for (e, t) in estimators.iter().zip(trajectories.iter_mut()) {
                let estimate = e.estimate().expect("estimator answered after an item");
                t.records.push(ErrorRecord {
                    index: consumed,
                    estimate,
                    true_quantile: truth,
                    mass_error: oracle.mass_error(estimate, quantile)?,
                });
            }
            if let Some(seg) = segments.iter().position(|r| r.contains(&(consumed - 1))) {
                if !segment_values.is_empty() {
                    segment_quantiles.push(SegmentQuantile {
                        index: consumed,
                        segment: seg,
                        quantile,
                        value: segment_values[seg],
                    });
                }
            }
        }
    }
    Ok(ExperimentOutput {
        trajectories,
        segment_quantiles,
    })
}

/// Writes trajectories as CSV with [`TRAJECTORY_HEADER`]. Mass errors are
/// printed with nine decimals.
pub fn write_trajectories_csv<W: Write>(mut out: W, trajectories: &[Trajectory], header: bool) -> io::Result<()> {
    if header {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
    }
    for t in trajectories {
        for r in &t.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.9}",
                t.run, t.estimator, t.quantile, r.index, r.estimate, r.true_quantile, r.mass_error
            )?;
        }
    }
    out.flush()
}

pub fn write_segment_quantiles_csv<W: Write>(mut out: W, series: &[SegmentQuantile], header: bool) -> io::Result<()> {
    if header {
        writeln!(out, "index,segment,quantile,value")?;
    }
    for s in series {
        writeln!(out, "{},{},{},{}", s.index, s.segment, s.quantile, s.value)?;
    }
    out.flush()
}

/// Final record of one trajectory, as written to summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRecord {
    pub run: u64,
    pub estimator: EstimatorKind,
    pub quantile: QuantileSpec,
    pub index: u64,
    pub estimate: i64,
    pub true_quantile: i64,
    pub mass_error: f64,
}

pub fn final_records(trajectories: &[Trajectory]) -> Vec<FinalRecord> {
    trajectories
        .iter()
        .filter_map(|t| {
            t.last().map(|r| FinalRecord {
                run: t.run,
                estimator: t.estimator,
                quantile: t.quantile,
                index: r.index,
                estimate: r.estimate,
                true_quantile: r.true_quantile,
                mass_error: r.mass_error,
            })
        })
        .collect()
}

pub fn write_summary_json<W: Write>(mut out: W, trajectories: &[Trajectory]) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &final_records(trajectories))?;
    writeln!(out)?;
    out.flush()
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::frugal::Frugal1U;

    fn kinds(s: &str) -> Vec<EstimatorKind> {
        EstimatorKind::parse_list(s).unwrap()
    }

    #[test]
    fn ascending_stream_pushes_median_drift_to_the_top() {
        let cfg = ExperimentConfig {
            stream: StreamSpec::ascending(100),
            estimators: kinds("frugal1u-median"),
            quantile: QuantileSpec::median(),
            stride: 10,
            seed: 0,
            run: 0,
        };
        let out = run_experiment(&cfg).unwrap();
        let t = &out.trajectories[0];
        assert_eq!(t.records.len(), 10);
        let last = t.last().unwrap();
        // brute force: every item is larger, so the estimate equals the count
        let mut brute = Frugal1U::new();
        (1..=100).for_each(|v| brute.update_median(v));
        assert_eq!(last.estimate, brute.estimate());
        assert_eq!(last.estimate, 100);
        assert_eq!(last.true_quantile, 51);
        assert!((last.mass_error - 0.49).abs() < 1e-12);
        assert!(out.segment_quantiles.is_empty());
    }

    // F counts strictly smaller items, so even the exact answer on a
    // constant stream scores -1/2 for the median.
    #[test]
    fn constant_stream_with_first_item_init_is_exact() {
        let items: Vec<StreamItem> = (0..500).map(|i| StreamItem { value: 321, index: i }).collect();
        let out = run_on_items(
            &items,
            &[0..500],
            &kinds("frugal1u:init=first,frugal2u:init=first,gk:t=20,qdigest:b=20,selection"),
            QuantileSpec::median(),
            50,
            1,
            0,
        )
        .unwrap();
        for t in &out.trajectories {
            for r in &t.records {
                assert_eq!(r.estimate, 321, "{}", t.estimator);
                assert_eq!(r.true_quantile, 321);
                assert_eq!(r.mass_error, -0.5);
            }
        }
    }

    #[test]
    fn records_are_strictly_increasing_and_end_at_last_item() {
        let cfg = ExperimentConfig {
            stream: StreamSpec::uniform(1, 100, 1234, 3),
            estimators: kinds("frugal2u,gk:t=20"),
            quantile: QuantileSpec::new(9, 10).unwrap(),
            stride: 100,
            seed: 5,
            run: 2,
        };
        let out = run_experiment(&cfg).unwrap();
        for t in &out.trajectories {
            assert!(t.records.windows(2).all(|w| w[0].index < w[1].index));
            assert_eq!(t.last().unwrap().index, 1234);
            assert_eq!(t.records.len(), 13);
            assert_eq!(t.run, 2);
            for r in &t.records {
                assert!(r.mass_error >= -0.9 && r.mass_error <= 0.1 + 1e-12);
            }
        }
    }

    #[test]
    fn piecewise_stream_reports_segment_quantiles() {
        let spec = StreamSpec::piecewise(
            vec![
                StreamSpec::uniform(1, 10, 300, 1),
                StreamSpec::uniform(100, 110, 200, 2),
            ],
            4,
        );
        let cfg = ExperimentConfig {
            stream: spec,
            estimators: kinds("frugal2u"),
            quantile: QuantileSpec::median(),
            stride: 100,
            seed: 0,
            run: 0,
        };
        let out = run_experiment(&cfg).unwrap();
        let segs: Vec<usize> = out.segment_quantiles.iter().map(|s| s.segment).collect();
        assert_eq!(segs, vec![0, 0, 0, 1, 1]);
        assert!((1..=10).contains(&out.segment_quantiles[0].value));
        assert!((100..=110).contains(&out.segment_quantiles[4].value));
    }

    #[test]
    fn csv_and_json_golden() {
        let t = Trajectory {
            run: 3,
            estimator: "gk:t=20".parse().unwrap(),
            quantile: QuantileSpec::new(9, 10).unwrap(),
            records: vec![
                ErrorRecord {
                    index: 100,
                    estimate: 17,
                    true_quantile: 20,
                    mass_error: -0.05,
                },
                ErrorRecord {
                    index: 150,
                    estimate: 21,
                    true_quantile: 21,
                    mass_error: 0.0,
                },
            ],
        };
        let mut csv = Vec::new();
        write_trajectories_csv(&mut csv, std::slice::from_ref(&t), true).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "run,estimator,quantile,index,estimate,true_quantile,mass_error\n\
             3,gk:t=20,9/10,100,17,20,-0.050000000\n\
             3,gk:t=20,9/10,150,21,21,0.000000000\n"
        );
        let mut json = Vec::new();
        write_summary_json(&mut json, &[t]).unwrap();
        assert_eq!(
            String::from_utf8(json).unwrap(),
            "[\n  {\n    \"run\": 3,\n    \"estimator\": \"gk:t=20\",\n    \"quantile\": \"9/10\",\n    \
             \"index\": 150,\n    \"estimate\": 21,\n    \"true_quantile\": 21,\n    \"mass_error\": 0.0\n  }\n]\n"
        );
    }

    #[test]
    fn rejects_empty_inputs() {
        let items = [StreamItem { value: 1, index: 0 }];
        assert!(run_on_items(&items, &[0..1], &[], QuantileSpec::median(), 1, 0, 0).is_err());
        assert!(run_on_items(&items, &[0..1], &kinds("frugal1u"), QuantileSpec::median(), 0, 0, 0).is_err());
        assert!(run_on_items(&[], &[], &kinds("frugal1u"), QuantileSpec::median(), 1, 0, 0).is_err());
    }
}
