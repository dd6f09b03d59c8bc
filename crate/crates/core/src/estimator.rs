//! Runtime wrapper that lets experiments and GROUPBY tables drive any
//! estimator through one interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{GkSummary, QDigest, Selection};
use crate::error::{Error, Result};
use crate::frugal::{Frugal1U, Frugal2U};
use crate::quantile::QuantileSpec;
use crate::rng::SplitRng;

pub const DEFAULT_GK_TUPLES: usize = 20;
pub const DEFAULT_QDIGEST_BUCKETS: u64 = 20;

/// How a frugal estimate is initialized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Start at zero.
    #[default]
    Zero,
    /// Start at the first item the estimator sees.
    First,
}

/// Estimator selection as written on the command line, e.g. `frugal2u`,
/// `frugal1u:init=first`, `gk:t=20`, `qdigest:b=20:domain=65536`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorKind {
    Frugal1UMedian { init: Init },
    Frugal1U { init: Init },
    Frugal2U { init: Init },
    Gk { tuples: usize },
    QDigest { buckets: u64, domain: Option<u64> },
    Selection,
}

impl EstimatorKind {
    pub fn is_frugal(&self) -> bool {
        matches!(
            self,
            EstimatorKind::Frugal1UMedian { .. } | EstimatorKind::Frugal1U { .. } | EstimatorKind::Frugal2U { .. }
        )
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<EstimatorKind>> {
        let kinds = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::Config("empty estimator list".into()));
        }
        Ok(kinds)
    }
}

fn parse_init(v: &str) -> Result<Init> {
    match v {
        "zero" => Ok(Init::Zero),
        "first" => Ok(Init::First),
        _ => Err(Error::Config(format!("unknown init {v:?}; expected zero or first"))),
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let mut params = Vec::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("estimator parameter {p:?} is not key=value")))?;
            params.push((k.trim(), v.trim()));
        }
        let bad = |k: &str| Error::Config(format!("estimator {name} has no parameter {k:?}"));
        let num = |k: &str, v: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| Error::Config(format!("parameter {k}={v:?} is not an integer")))
        };

        let mut kind = match name {
            "frugal1u-median" => EstimatorKind::Frugal1UMedian { init: Init::Zero },
            "frugal1u" => EstimatorKind::Frugal1U { init: Init::Zero },
            "frugal2u" => EstimatorKind::Frugal2U { init: Init::Zero },
            "gk" => EstimatorKind::Gk {
                tuples: DEFAULT_GK_TUPLES,
            },
            "qdigest" => EstimatorKind::QDigest {
                buckets: DEFAULT_QDIGEST_BUCKETS,
                domain: None,
            },
            "selection" => EstimatorKind::Selection,
            _ => return Err(Error::Config(format!("unknown estimator {name:?}"))),
        };
        for (k, v) in params {
            match (&mut kind, k) {
                (
                    EstimatorKind::Frugal1UMedian { init }
                    | EstimatorKind::Frugal1U { init }
                    | EstimatorKind::Frugal2U { init },
                    "init",
                ) => *init = parse_init(v)?,
                (EstimatorKind::Gk { tuples }, "t") => {
                    *tuples = num(k, v)? as usize;
                    if *tuples < 2 {
                        return Err(Error::Config("gk:t must be >= 2".into()));
                    }
                }
                (EstimatorKind::QDigest { buckets, .. }, "b") => {
                    *buckets = num(k, v)?;
                    if *buckets == 0 {
                        return Err(Error::Config("qdigest:b must be >= 1".into()));
                    }
                }
                (EstimatorKind::QDigest { domain, .. }, "domain") => {
                    let d = num(k, v)?;
                    if d == 0 {
                        return Err(Error::Config("qdigest:domain must be >= 1".into()));
                    }
                    *domain = Some(d);
                }
                _ => return Err(bad(k)),
            }
        }
        Ok(kind)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let init = |f: &mut fmt::Formatter<'_>, init: &Init| match init {
            Init::Zero => Ok(()),
            Init::First => f.write_str(":init=first"),
        };
        match self {
            EstimatorKind::Frugal1UMedian { init: i } => {
                f.write_str("frugal1u-median")?;
                init(f, i)
            }
            EstimatorKind::Frugal1U { init: i } => {
                f.write_str("frugal1u")?;
                init(f, i)
            }
            EstimatorKind::Frugal2U { init: i } => {
                f.write_str("frugal2u")?;
                init(f, i)
            }
            EstimatorKind::Gk { tuples } => write!(f, "gk:t={tuples}"),
            EstimatorKind::QDigest { buckets, domain } => {
                write!(f, "qdigest:b={buckets}")?;
                match domain {
                    Some(d) => write!(f, ":domain={d}"),
                    None => Ok(()),
                }
            }
            EstimatorKind::Selection => f.write_str("selection"),
        }
    }
}

impl TryFrom<String> for EstimatorKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorKind> for String {
    fn from(k: EstimatorKind) -> String {
        k.to_string()
    }
}

/// Persistent memory held by one estimator, in value-sized words plus any
/// sub-word flag bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryUsage {
    pub units: u64,
    pub extra_bits: u64,
}

impl std::ops::Add for MemoryUsage {
    type Output = MemoryUsage;

    fn add(self, rhs: MemoryUsage) -> MemoryUsage {
        MemoryUsage {
            units: self.units + rhs.units,
            extra_bits: self.extra_bits + rhs.extra_bits,
        }
    }
}

impl std::iter::Sum for MemoryUsage {
    fn sum<I: Iterator<Item = MemoryUsage>>(iter: I) -> MemoryUsage {
        iter.fold(MemoryUsage::default(), |a, b| a + b)
    }
}

/// Inclusive value range of a stream, used to place q-digest domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: i64,
    pub max: i64,
}

impl ValueRange {
    pub fn of(values: impl IntoIterator<Item = i64>) -> Option<ValueRange> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(ValueRange { min: v, max: v }),
            Some(r) => Some(ValueRange {
                min: r.min.min(v),
                max: r.max.max(v),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorState {
    Frugal1UMedian(Option<Frugal1U>),
    Frugal1U(Option<Frugal1U>),
    Frugal2U(Option<Frugal2U>),
    Gk(GkSummary),
    QDigest { digest: QDigest, offset: i64 },
    Selection(Selection),
}

/// An estimator instance bound to a target quantile and its own random
/// source. Every observed item consumes exactly one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    kind: EstimatorKind,
    quantile: QuantileSpec,
    rng: SplitRng,
    state: EstimatorState,
}

fn init_state<T: Default>(init: Init) -> Option<T> {
    match init {
        Init::Zero => Some(T::default()),
        Init::First => None,
    }
}

impl Estimator {
    /// `range` is required for a q-digest without an explicit domain; items
    /// are then shifted so that `range.min` maps to 1.
    pub fn new(kind: EstimatorKind, quantile: QuantileSpec, seed: u64, range: Option<ValueRange>) -> Result<Self> {
        let state = match kind {
            EstimatorKind::Frugal1UMedian { init } => EstimatorState::Frugal1UMedian(init_state(init)),
            EstimatorKind::Frugal1U { init } => EstimatorState::Frugal1U(init_state(init)),
            EstimatorKind::Frugal2U { init } => EstimatorState::Frugal2U(init_state(init)),
            EstimatorKind::Gk { tuples } => EstimatorState::Gk(GkSummary::with_budget(tuples)?),
            EstimatorKind::QDigest { buckets, domain } => {
                let (domain_max, offset) = match (domain, range) {
                    (Some(d), _) => (d, 0),
                    (None, Some(r)) => {
                        let width = r.max as i128 - r.min as i128 + 1;
                        let width = u64::try_from(width)
                            .map_err(|_| Error::Config(format!("value range {r:?} is too wide for a q-digest")))?;
                        (width, r.min.saturating_sub(1))
                    }
                    (None, None) => {
                        return Err(Error::Config(
                            "qdigest needs a domain (qdigest:domain=N) or a known value range".into(),
                        ))
                    }
                };
                EstimatorState::QDigest {
                    digest: QDigest::new(domain_max, buckets)?,
                    offset,
                }
            }
            EstimatorKind::Selection => EstimatorState::Selection(Selection::new()),
        };
        Ok(Estimator {
            kind,
            quantile,
            rng: SplitRng::new(seed),
            state,
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn quantile(&self) -> QuantileSpec {
        self.quantile
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn observe(&mut self, item: i64) -> Result<()> {
        let rand = self.rng.unit();
        let q = self.quantile;
        match &mut self.state {
            EstimatorState::Frugal1UMedian(s) => s.get_or_insert(Frugal1U::starting_at(item)).update_median(item),
            EstimatorState::Frugal1U(s) => s.get_or_insert(Frugal1U::starting_at(item)).update(q, item, rand)?,
            EstimatorState::Frugal2U(s) => s.get_or_insert(Frugal2U::starting_at(item)).update(q, item, rand)?,
            EstimatorState::Gk(s) => s.insert(item),
            EstimatorState::QDigest { digest, offset } => digest.insert(item.saturating_sub(*offset))?,
            EstimatorState::Selection(s) => s.update(q, item, rand)?,
        }
        Ok(())
    }

    /// Current estimate, or `None` before anything can be answered.
    pub fn estimate(&self) -> Option<i64> {
        let q = self.quantile;
        match &self.state {
            EstimatorState::Frugal1UMedian(s) | EstimatorState::Frugal1U(s) => s.map(|s| s.estimate()),
            EstimatorState::Frugal2U(s) => s.map(|s| s.estimate()),
            EstimatorState::Gk(s) => s.query(q).ok(),
            EstimatorState::QDigest { digest, offset } => digest.query(q).ok().map(|v| v + offset),
            EstimatorState::Selection(s) => s.query().ok(),
        }
    }

    pub fn memory(&self) -> MemoryUsage {
        match &self.state {
            EstimatorState::Frugal1UMedian(_) | EstimatorState::Frugal1U(_) => MemoryUsage {
                units: 1,
                extra_bits: 0,
            },
            EstimatorState::Frugal2U(_) => MemoryUsage {
                units: 2,
                extra_bits: 1,
            },
            EstimatorState::Gk(s) => MemoryUsage {
                units: s.tuples().len() as u64,
                extra_bits: 0,
            },
            EstimatorState::QDigest { digest, .. } => MemoryUsage {
                units: digest.node_count() as u64,
                extra_bits: 0,
            },
            // lower, upper, candidate, counter, iteration, position
            EstimatorState::Selection(_) => MemoryUsage {
                units: 6,
                extra_bits: 0,
            },
        }
    }
}
