//! Streaming q-digest over the integer domain `[1, domain_max]`.
//!
//! Nodes of the complete binary tree are addressed heap-style: the root is
//! 1, node `v` has children `2v` and `2v + 1`, and the leaf for value `x`
//! is `sigma + x - 1` where `sigma` is the domain rounded up to a power of
//! two. Every insertion is followed by a bottom-up compression with
//! threshold `floor(n / b)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::QuantileSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDigest {
    domain_max: u64,
    sigma: u64,
    buckets: u64,
    n: u64,
    nodes: BTreeMap<u64, u64>,
}

impl QDigest {
    pub fn new(domain_max: u64, buckets: u64) -> Result<Self> {
        if domain_max == 0 || domain_max > 1 << 62 {
            return Err(Error::Config(format!(
                "q-digest domain maximum must be in [1, 2^62], got {domain_max}"
            )));
        }
        if buckets == 0 {
            return Err(Error::Config("q-digest bucket budget must be >= 1".into()));
        }
        Ok(QDigest {
            domain_max,
            sigma: domain_max.next_power_of_two(),
            buckets,
            n: 0,
            nodes: BTreeMap::new(),
        })
    }

    pub fn domain_max(&self) -> u64 {
        self.domain_max
    }

    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    pub fn buckets(&self) -> u64 {
        self.buckets
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Stored `(node id, count)` pairs in id order.
    pub fn nodes(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.nodes.iter().map(|(&id, &c)| (id, c))
    }

    pub fn count(&self, node: u64) -> u64 {
        self.nodes.get(&node).copied().unwrap_or(0)
    }

    /// floor(n / b)
    pub fn threshold(&self) -> u64 {
        self.n / self.buckets
    }

    pub fn leaf(&self, value: u64) -> u64 {
        self.sigma + value - 1
    }

    /// Inclusive value range `[lo, hi]` covered by `node`.
    pub fn range(&self, node: u64) -> (u64, u64) {
        let depth = 63 - node.leading_zeros() as u64;
        let leaf_depth = self.sigma.trailing_zeros() as u64;
        let width = 1u64 << (leaf_depth - depth);
        let offset = node - (1 << depth);
        (offset * width + 1, (offset + 1) * width)
    }

    pub fn insert(&mut self, item: i64) -> Result<()> {
        if item < 1 || item as u64 > self.domain_max {
            return Err(Error::OutOfDomain {
                item,
                max: self.domain_max,
            });
        }
        *self.nodes.entry(self.leaf(item as u64)).or_insert(0) += 1;
        self.n += 1;
        self.compress();
        Ok(())
    }

    /// Merges any non-root node whose family (itself, sibling, parent)
    /// holds at most `floor(n / b)` items into its parent. Sweeps from the
    /// deepest ids upward and repeats until a sweep makes no change, since
    /// merging a node away can leave its children with an empty parent.
    fn compress(&mut self) {
        let alpha = self.threshold();
        if alpha == 0 {
            return;
        }
        loop {
            let mut changed = false;
            let mut cursor = match self.nodes.keys().next_back() {
                Some(&k) => k,
                None => return,
            };
            while cursor > 1 {
                let node = match self.nodes.range(..=cursor).next_back() {
                    Some((&k, _)) if k > 1 => k,
                    _ => break,
                };
                let sibling = node ^ 1;
                let parent = node >> 1;
                let family = self.count(node) + self.count(sibling) + self.count(parent);
                if family <= alpha {
                    let moved = self.count(node) + self.count(sibling);
                    self.nodes.remove(&node);
                    self.nodes.remove(&sibling);
                    *self.nodes.entry(parent).or_insert(0) += moved;
                    changed = true;
                }
                cursor = node.min(sibling) - 1;
            }
            if !changed {
                return;
            }
        }
    }

    /// Walks nodes in post-order (by range upper bound, narrower ranges
    /// first) and returns the upper bound of the node at which the
    /// accumulated count reaches the target rank.
    pub fn query(&self, q: QuantileSpec) -> Result<i64> {
        if self.n == 0 {
            return Err(Error::Empty("q-digest"));
        }
        let target = q.target_rank(self.n);
        let mut ordered: Vec<(u64, u64, u64)> = self
            .nodes
            .iter()
            .map(|(&id, &c)| {
                let (lo, hi) = self.range(id);
                (hi, hi - lo, c)
            })
            .collect();
        ordered.sort_unstable_by_key(|&(hi, width, _)| (hi, width));
        let mut seen = 0;
        for (hi, _, c) in ordered {
            seen += c;
            if seen >= target {
                return Ok(hi.min(self.domain_max) as i64);
            }
        }
        Ok(self.domain_max as i64)
    }

    /// Checks node validity, `sum count = n`, the per-node family condition
    /// for every non-root node, and the `3b` size bound.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let total: u64 = self.nodes.values().sum();
        if total != self.n {
            return Err(format!("counts sum to {total}, expected {}", self.n));
        }
        let alpha = self.threshold();
        for (&id, &c) in &self.nodes {
            if id == 0 || id >= 2 * self.sigma {
                return Err(format!("node id {id} outside tree of {} leaves", self.sigma));
            }
            if c == 0 {
                return Err(format!("node {id} stored with zero count"));
            }
            if id > 1 {
                let family = c + self.count(id ^ 1) + self.count(id >> 1);
                if family <= alpha {
                    return Err(format!("node {id} family {family} <= floor(alpha) {alpha}"));
                }
            }
        }
        if self.nodes.len() as u64 > 3 * self.buckets {
            return Err(format!("{} nodes exceed 3b = {}", self.nodes.len(), 3 * self.buckets));
        }
        Ok(())
    }
}
