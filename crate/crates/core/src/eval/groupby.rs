//! Per-key estimator table for GROUPBY-style streams.
//!
//! Each key gets its own estimator, created on first sight and seeded from
//! `(run seed, key)`, so a key's state depends only on its own subsequence.
//! Tables can be split by key hash and filled on separate threads.

use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorKind, MemoryUsage, ValueRange};
use crate::quantile::QuantileSpec;
use crate::rng::{fnv1a, key_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub estimator: Estimator,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTable {
    kind: EstimatorKind,
    quantile: QuantileSpec,
    seed: u64,
    range: Option<ValueRange>,
    groups: BTreeMap<String, Group>,
}

/// Final per-key result, one row of the GROUPBY output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: String,
    pub estimator: EstimatorKind,
    pub quantile: QuantileSpec,
    pub count: u64,
    pub estimate: i64,
    pub memory_units: u64,
}

impl GroupTable {
    /// `range` places q-digest domains when the kind has none.
    pub fn new(kind: EstimatorKind, quantile: QuantileSpec, seed: u64, range: Option<ValueRange>) -> Self {
        GroupTable {
            kind,
            quantile,
            seed,
            range,
            groups: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn quantile(&self) -> QuantileSpec {
        self.quantile
    }

    pub fn feed(&mut self, key: &str, value: i64) -> Result<()> {
        if !self.groups.contains_key(key) {
            let estimator = Estimator::new(self.kind, self.quantile, key_seed(self.seed, key), self.range)?;
            self.groups.insert(key.to_string(), Group { estimator, count: 0 });
        }
        let group = self.groups.get_mut(key).expect("group inserted above");
        group.estimator.observe(value)?;
        group.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Group> {
        self.groups.get(key)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &Group)> {
        self.groups.iter().map(|(k, g)| (k.as_str(), g))
    }

    /// Total accounted memory across groups.
    pub fn memory(&self) -> MemoryUsage {
        self.groups.values().map(|g| g.estimator.memory()).sum()
    }

    pub fn summaries(&self) -> Vec<GroupSummary> {
        self.groups
            .iter()
            .filter_map(|(key, g)| {
                g.estimator.estimate().map(|estimate| GroupSummary {
                    key: key.clone(),
                    estimator: self.kind,
                    quantile: self.quantile,
                    count: g.count,
                    estimate,
                    memory_units: g.estimator.memory().units,
                })
            })
            .collect()
    }

    /// Folds a table built over a disjoint key set into this one.
    pub fn absorb(&mut self, other: GroupTable) -> Result<()> {
        if other.kind != self.kind || other.quantile != self.quantile || other.seed != self.seed {
            return Err(Error::Config("cannot merge tables with different settings".into()));
        }
        for (k, g) in other.groups {
            if self.groups.insert(k.clone(), g).is_some() {
                return Err(Error::Config(format!("key {k:?} present in both tables")));
            }
        }
        Ok(())
    }
}

/// Shard index of `key` among `shards` partitions.
pub fn shard_of(key: &str, shards: usize) -> usize {
    (fnv1a(key.as_bytes()) % shards.max(1) as u64) as usize
}

/// Builds a table from keyed records using `shards` worker threads. Each
/// worker owns the keys hashing to its shard and sees them in input order,
/// so the result equals a sequential build.
pub fn build_partitioned(
    records: &[(&str, i64)],
    kind: EstimatorKind,
    quantile: QuantileSpec,
    seed: u64,
    range: Option<ValueRange>,
    shards: usize,
) -> Result<GroupTable> {
    let shards = shards.max(1);
    let tables: Vec<Result<GroupTable>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..shards)
            .map(|shard| {
                scope.spawn(move || {
                    let mut table = GroupTable::new(kind, quantile, seed, range);
                    for &(key, value) in records.iter().filter(|(k, _)| shard_of(k, shards) == shard) {
                        table.feed(key, value)?;
                    }
                    Ok(table)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shard worker panicked"))
            .collect()
    });
    let mut merged = GroupTable::new(kind, quantile, seed, range);
    for t in tables {
        merged.absorb(t?)?;
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimatorState;
    use crate::frugal::Frugal1U;

    fn kind(s: &str) -> EstimatorKind {
        s.parse().unwrap()
    }

    #[test]
    fn single_key_matches_worked_trace() {
        let mut table = GroupTable::new(kind("frugal1u-median"), QuantileSpec::median(), 0, None);
        let mut trace = Vec::new();
        for v in [4, 2, 1, 5] {
            table.feed("k", v).unwrap();
            trace.push(table.get("k").unwrap().estimator.estimate().unwrap());
        }
        assert_eq!(trace, vec![1, 2, 1, 2]);
        assert_eq!(table.get("k").unwrap().count, 4);
    }

    #[test]
    fn interleaved_keys_match_isolated_runs() {
        let q = QuantileSpec::median();
        let a = [5, 9, 1, 7, 7, 3, 10, 2];
        let b = [100, 50, 75, 80, 20];
        let mut table = GroupTable::new(kind("frugal2u"), q, 9, None);
        let (mut ia, mut ib) = (a.iter(), b.iter());
        loop {
            let na = ia.next();
            let nb = ib.next();
            if na.is_none() && nb.is_none() {
                break;
            }
            if let Some(&v) = na {
                table.feed("A", v).unwrap();
            }
            if let Some(&v) = nb {
                table.feed("B", v).unwrap();
            }
        }
        for (key, values) in [("A", &a[..]), ("B", &b[..])] {
            let mut alone = Estimator::new(kind("frugal2u"), q, key_seed(9, key), None).unwrap();
            values.iter().for_each(|&v| alone.observe(v).unwrap());
            assert_eq!(table.get(key).unwrap().estimator, alone);
        }
    }

    #[test]
    fn one_unit_per_frugal_group() {
        let mut table = GroupTable::new(kind("frugal1u"), QuantileSpec::median(), 1, None);
        for i in 0..10_000 {
            table.feed(&format!("10.0.{}.{}", i / 256, i % 256), i).unwrap();
            table.feed(&format!("10.0.{}.{}", i / 256, i % 256), i + 1).unwrap();
        }
        assert_eq!(table.len(), 10_000);
        assert_eq!(
            table.memory(),
            MemoryUsage {
                units: 10_000,
                extra_bits: 0
            }
        );

        let mut table = GroupTable::new(kind("frugal2u"), QuantileSpec::median(), 1, None);
        for i in 0..500 {
            table.feed(&i.to_string(), i).unwrap();
        }
        assert_eq!(
            table.memory(),
            MemoryUsage {
                units: 1000,
                extra_bits: 500
            }
        );
    }

    #[test]
    fn first_item_init_per_group() {
        let mut table = GroupTable::new(kind("frugal1u:init=first"), QuantileSpec::median(), 1, None);
        table.feed("x", 500).unwrap();
        table.feed("y", -7).unwrap();
        match table.get("x").unwrap().estimator.state() {
            EstimatorState::Frugal1U(Some(s)) => assert_eq!(*s, Frugal1U::starting_at(500)),
            other => panic!("unexpected state {other:?}"),
        }
        let rows = table.summaries();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].key.as_str(), rows[0].estimate), ("x", 500));
        assert_eq!((rows[1].key.as_str(), rows[1].estimate), ("y", -7));
    }

    #[test]
    fn partitioned_build_equals_sequential() {
        let records: Vec<(String, i64)> = (0..5000)
            .map(|i| (format!("key{}", (i * 7919) % 97), (i * 31 % 1000) as i64))
            .collect();
        let borrowed: Vec<(&str, i64)> = records.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let q = QuantileSpec::new(9, 10).unwrap();
        let mut seq = GroupTable::new(kind("frugal2u"), q, 3, None);
        for &(k, v) in &borrowed {
            seq.feed(k, v).unwrap();
        }
        let par = build_partitioned(&borrowed, kind("frugal2u"), q, 3, None, 4).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn absorb_rejects_overlap() {
        let q = QuantileSpec::median();
        let mut a = GroupTable::new(kind("frugal1u"), q, 0, None);
        a.feed("k", 1).unwrap();
        let mut b = GroupTable::new(kind("frugal1u"), q, 0, None);
        b.feed("k", 2).unwrap();
        assert!(a.absorb(b).is_err());
        let c = GroupTable::new(kind("frugal2u"), q, 0, None);
        assert!(a.absorb(c).is_err());
    }
}
