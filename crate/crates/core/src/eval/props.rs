//! Monte-Carlo checks of the frugal estimators' probabilistic guarantees.
//!
//! * approach: a median run started far below the median enters the band
//!   `[1/2 - band, 1/2 + band]` of CDF mass within `5 * M / band` steps;
//! * stability: a run started at the true median stays within
//!   `2 * sqrt(delta * ln(t / epsilon))` of mass 1/2 after `t` steps;
//! * adaptation: on a piecewise stream, Frugal-2U reaches each segment's
//!   ±0.1 mass band before the segment ends, without resetting state.
//!
//! The failure-rate ceilings are calibration choices for these desk-scale
//! runs, not derived bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::bench::dynamic_cauchy_spec;
use crate::eval::oracle::OracleState;
use crate::frugal::{Frugal1U, Frugal2U};
use crate::quantile::QuantileSpec;
use crate::rng::{derive_seed, SplitRng};
use crate::stream::generate;

/// Half-width of the mass band a segment estimate has to reach.
pub const ADAPTATION_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyTestConfig {
    /// Test distribution is uniform on the integers `[lo, hi]`.
    pub lo: i64,
    pub hi: i64,
    /// Largest single-location probability of the test distribution.
    pub delta: f64,
    pub epsilon: f64,
    /// Half-width of the approach target band, in CDF mass.
    pub band: f64,
    /// Distance from the start (0) to the true median.
    pub start_distance: u64,
    /// Step budget for the approach check.
    pub approach_steps: u64,
    pub stability_steps: u64,
    pub runs: u64,
    /// Items per segment in the adaptation stream.
    pub segment_length: u64,
    pub seed: u64,
    pub max_approach_failure: f64,
    pub max_stability_failure: f64,
    pub max_adaptation_failure: f64,
}

impl Default for PropertyTestConfig {
    fn default() -> Self {
        let (lo, hi) = (1, 1000);
        let band = 0.05;
        let start_distance = uniform_median(lo, hi) as u64;
        PropertyTestConfig {
            lo,
            hi,
            delta: 1.0 / (hi - lo + 1) as f64,
            epsilon: 0.05,
            band,
            start_distance,
            approach_steps: (5.0 * start_distance as f64 / band).ceil() as u64,
            stability_steps: 100_000,
            runs: 200,
            segment_length: 20_000,
            seed: 0,
            max_approach_failure: 0.05,
            max_stability_failure: 0.10,
            max_adaptation_failure: 0.30,
        }
    }
}

impl PropertyTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!("delta must be in [0, 1), got {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.band > 0.0 && self.band < 0.5) {
            return Err(Error::Config(format!("band must be in (0, 1/2), got {}", self.band)));
        }
        if self.lo > self.hi {
            return Err(Error::Config(format!("empty test range [{}, {}]", self.lo, self.hi)));
        }
        if self.runs == 0 || self.stability_steps == 0 || self.approach_steps == 0 || self.segment_length == 0 {
            return Err(Error::Config(
                "runs, step budgets and segment length must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Mass bound the stability check compares against.
    pub fn stability_bound(&self) -> f64 {
        2.0 * (self.delta * (self.stability_steps as f64 / self.epsilon).ln()).sqrt()
    }

    /// Pr(X < x) for the uniform test distribution.
    pub fn cdf(&self, x: i64) -> f64 {
        let width = (self.hi - self.lo + 1) as f64;
        ((x - self.lo) as f64 / width).clamp(0.0, 1.0)
    }
}

/// Upper median of the uniform integers `[lo, hi]`.
fn uniform_median(lo: i64, hi: i64) -> i64 {
    lo + (hi - lo + 1) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub runs: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub max_failure_rate: f64,
    pub passed: bool,
}

impl PropertyOutcome {
    fn new(name: &str, runs: u64, failures: u64, max_failure_rate: f64) -> Self {
        let failure_rate = failures as f64 / runs as f64;
        PropertyOutcome {
            name: name.to_string(),
            runs,
            failures,
            failure_rate,
            max_failure_rate,
            passed: failure_rate <= max_failure_rate,
        }
    }
}

fn run_rngs(cfg: &PropertyTestConfig, suite: u64, run: u64) -> (SplitRng, SplitRng) {
    let base = derive_seed(derive_seed(cfg.seed, suite), run);
    (SplitRng::new(derive_seed(base, 0)), SplitRng::new(derive_seed(base, 1)))
}

/// Whether one approach run enters the band within the step budget.
pub fn approach_run(cfg: &PropertyTestConfig, run: u64) -> bool {
    let q = QuantileSpec::median();
    let (mut items, mut rands) = run_rngs(cfg, 1, run);
    let mut est = Frugal1U::starting_at(uniform_median(cfg.lo, cfg.hi) - cfg.start_distance as i64);
    for _ in 0..cfg.approach_steps {
        let item = items.gen_range(cfg.lo..=cfg.hi);
        est.update(q, item, rands.unit()).expect("unit draw in range");
        if (cfg.cdf(est.estimate()) - 0.5).abs() <= cfg.band {
            return true;
        }
    }
    false
}

/// Final |F(m) - 1/2| of one stability run.
pub fn stability_run(cfg: &PropertyTestConfig, run: u64) -> f64 {
    let q = QuantileSpec::median();
    let (mut items, mut rands) = run_rngs(cfg, 2, run);
    let mut est = Frugal1U::starting_at(uniform_median(cfg.lo, cfg.hi));
    for _ in 0..cfg.stability_steps {
        let item = items.gen_range(cfg.lo..=cfg.hi);
        est.update(q, item, rands.unit()).expect("unit draw in range");
    }
    (cfg.cdf(est.estimate()) - 0.5).abs()
}

/// How one estimator fared on one segment of the adaptation stream. Mass
/// errors are measured against that segment's items only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentAdaptation {
    pub segment: usize,
    pub segment_quantile: i64,
    pub start_estimate: i64,
    pub end_estimate: i64,
    /// Error of the estimate carried into the segment.
    pub start_error: f64,
    pub end_error: f64,
    /// Items consumed before first entering the band, if ever.
    pub entered_after: Option<u64>,
}

impl SegmentAdaptation {
    pub fn entered(&self) -> bool {
        self.entered_after.is_some()
    }

    pub fn improved(&self) -> bool {
        self.end_error.abs() < self.start_error.abs()
    }

    /// The estimate moved toward the segment quantile (or was already there).
    pub fn moved_toward(&self) -> bool {
        let need = (self.segment_quantile - self.start_estimate).signum();
        let moved = (self.end_estimate - self.start_estimate).signum();
        need == 0 || moved == need
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRun {
    pub run: u64,
    pub frugal1u: Vec<SegmentAdaptation>,
    pub frugal2u: Vec<SegmentAdaptation>,
}

impl AdaptationRun {
    /// Frugal-2U entered and improved on every segment.
    pub fn passed(&self) -> bool {
        self.frugal2u.iter().all(|s| s.entered() && s.improved())
    }
}

/// Runs Frugal-1U and Frugal-2U (both starting at 0) over the piecewise
/// stand-in stream of run `run`.
pub fn adaptation_run(cfg: &PropertyTestConfig, q: QuantileSpec, run: u64) -> Result<AdaptationRun> {
    let spec = dynamic_cauchy_spec(derive_seed(derive_seed(cfg.seed, 3), run), cfg.segment_length);
    let values: Vec<i64> = generate(&spec)?.into_iter().map(|i| i.value).collect();
    let (mut r1, mut r2) = run_rngs(cfg, 4, run);
    let mut one = Frugal1U::new();
    let mut two = Frugal2U::new();
    let mut out = AdaptationRun {
        run,
        frugal1u: Vec::new(),
        frugal2u: Vec::new(),
    };
    for (segment, bounds) in spec.segment_bounds().into_iter().enumerate() {
        let items = &values[bounds.start as usize..bounds.end as usize];
        let oracle = OracleState::from_values(items.iter().copied());
        let segment_quantile = oracle.quantile(q)?;
        let err = |m: i64| oracle.mass_error(m, q);
        let (s1, s2) = (one.estimate(), two.estimate());
        let (e1, e2) = (err(s1)?, err(s2)?);
        let mut entered = [None, None];
        for (i, &item) in items.iter().enumerate() {
            one.update(q, item, r1.unit())?;
            two.update(q, item, r2.unit())?;
            for (slot, m) in [one.estimate(), two.estimate()].into_iter().enumerate() {
                if entered[slot].is_none() && err(m)?.abs() <= ADAPTATION_BAND {
                    entered[slot] = Some(i as u64 + 1);
                }
            }
        }
        out.frugal1u.push(SegmentAdaptation {
            segment,
            segment_quantile,
            start_estimate: s1,
            end_estimate: one.estimate(),
            start_error: e1,
            end_error: err(one.estimate())?,
            entered_after: entered[0],
        });
        out.frugal2u.push(SegmentAdaptation {
            segment,
            segment_quantile,
            start_estimate: s2,
            end_estimate: two.estimate(),
            start_error: e2,
            end_error: err(two.estimate())?,
            entered_after: entered[1],
        });
    }
    Ok(out)
}

pub fn adaptation_report(cfg: &PropertyTestConfig, q: QuantileSpec) -> Result<Vec<AdaptationRun>> {
    (0..cfg.runs).map(|run| adaptation_run(cfg, q, run)).collect()
}

pub fn approach_outcome(cfg: &PropertyTestConfig) -> PropertyOutcome {
    let failures = (0..cfg.runs).filter(|&r| !approach_run(cfg, r)).count() as u64;
    PropertyOutcome::new("approach", cfg.runs, failures, cfg.max_approach_failure)
}

pub fn stability_outcome(cfg: &PropertyTestConfig) -> PropertyOutcome {
    let bound = cfg.stability_bound();
    let failures = (0..cfg.runs).filter(|&r| stability_run(cfg, r) > bound).count() as u64;
    PropertyOutcome::new("stability", cfg.runs, failures, cfg.max_stability_failure)
}

pub fn adaptation_outcome(cfg: &PropertyTestConfig) -> Result<PropertyOutcome> {
    let report = adaptation_report(cfg, QuantileSpec::median())?;
    let failures = report.iter().filter(|r| !r.passed()).count() as u64;
    Ok(PropertyOutcome::new(
        "adaptation",
        cfg.runs,
        failures,
        cfg.max_adaptation_failure,
    ))
}

pub fn property_suite(cfg: &PropertyTestConfig) -> Result<Vec<PropertyOutcome>> {
    cfg.validate()?;
    Ok(vec![
        approach_outcome(cfg),
        stability_outcome(cfg),
        adaptation_outcome(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_values() {
        let cfg = PropertyTestConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.start_distance, 501);
        assert_eq!(cfg.approach_steps, 50_100);
        assert_eq!(cfg.delta, 0.001);
        // 2 * sqrt(0.001 * ln(2e6))
        assert!((cfg.stability_bound() - 0.24091).abs() < 1e-4);
        assert_eq!(cfg.cdf(501), 0.5);
        assert_eq!(cfg.cdf(0), 0.0);
        assert_eq!(cfg.cdf(5000), 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        for f in [
            |c: &mut PropertyTestConfig| c.delta = 1.0,
            |c: &mut PropertyTestConfig| c.delta = -0.1,
            |c: &mut PropertyTestConfig| c.epsilon = 0.0,
            |c: &mut PropertyTestConfig| c.epsilon = 1.0,
            |c: &mut PropertyTestConfig| c.runs = 0,
        ] {
            let mut cfg = PropertyTestConfig::default();
            f(&mut cfg);
            assert!(cfg.validate().is_err());
        }
        let cfg = PropertyTestConfig {
            delta: 0.0,
            ..Default::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn tiny_budget_cannot_approach() {
        let cfg = PropertyTestConfig {
            approach_steps: 10,
            runs: 5,
            ..Default::default()
        };
        let out = approach_outcome(&cfg);
        assert_eq!(out.failures, 5);
        assert!(!out.passed);
    }

    #[test]
    fn small_suite_is_deterministic() {
        let cfg = PropertyTestConfig {
            runs: 4,
            stability_steps: 2_000,
            segment_length: 2_000,
            seed: 3,
            ..Default::default()
        };
        assert_eq!(property_suite(&cfg).unwrap(), property_suite(&cfg).unwrap());
    }
}
