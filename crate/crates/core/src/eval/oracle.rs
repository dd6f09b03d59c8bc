//! Exact quantile oracles used to score estimators. They keep every item and
//! exist only for evaluation.

use crate::error::{Error, Result};
use crate::quantile::QuantileSpec;

/// Sorted multiset of everything seen so far.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleState {
    items: Vec<i64>,
}

impl OracleState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: impl IntoIterator<Item = i64>) -> Self {
        let mut items: Vec<i64> = values.into_iter().collect();
        items.sort_unstable();
        OracleState { items }
    }

    pub fn insert(&mut self, value: i64) {
        let pos = self.items.partition_point(|&x| x <= value);
        self.items.insert(pos, value);
    }

    pub fn len(&self) -> u64 {
        self.items.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sorted(&self) -> &[i64] {
        &self.items
    }

    /// Number of items strictly smaller than `x`.
    pub fn count_below(&self, x: i64) -> u64 {
        self.items.partition_point(|&v| v < x) as u64
    }

    /// Empirical F(x): fraction of items strictly smaller than `x`.
    pub fn cdf(&self, x: i64) -> Result<f64> {
        if self.items.is_empty() {
            return Err(Error::Empty("oracle"));
        }
        Ok(self.count_below(x) as f64 / self.items.len() as f64)
    }

    pub fn quantile(&self, q: QuantileSpec) -> Result<i64> {
        if self.items.is_empty() {
            return Err(Error::Empty("oracle"));
        }
        Ok(self.items[q.target_rank(self.len()) as usize - 1])
    }

    /// Signed relative mass error F(estimate) - h/k.
    pub fn mass_error(&self, estimate: i64, q: QuantileSpec) -> Result<f64> {
        Ok(self.cdf(estimate)? - q.fraction())
    }
}

/// Oracle over the prefixes of a stream known in advance: items are revealed
/// one at a time and rank queries run in O(log n) through a Fenwick tree
/// over the distinct values.
#[derive(Debug, Clone)]
pub struct PrefixOracle {
    distinct: Vec<i64>,
    slots: Vec<usize>,
    tree: Vec<u64>,
    revealed: usize,
}

impl PrefixOracle {
    pub fn new(stream: &[i64]) -> Self {
        let mut distinct = stream.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let slots = stream
            .iter()
            .map(|v| distinct.binary_search(v).expect("value present"))
            .collect();
        PrefixOracle {
            tree: vec![0; distinct.len() + 1],
            distinct,
            slots,
            revealed: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.revealed as u64
    }

    pub fn is_empty(&self) -> bool {
        self.revealed == 0
    }

    /// Reveals the next stream item.
    pub fn advance(&mut self) {
        let mut i = self.slots[self.revealed] + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
        self.revealed += 1;
    }

    fn prefix(&self, slots: usize) -> u64 {
        let mut i = slots;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }

    pub fn count_below(&self, x: i64) -> u64 {
        self.prefix(self.distinct.partition_point(|&v| v < x))
    }

    pub fn mass_error(&self, estimate: i64, q: QuantileSpec) -> Result<f64> {
        if self.revealed == 0 {
            return Err(Error::Empty("oracle"));
        }
        Ok(self.count_below(estimate) as f64 / self.revealed as f64 - q.fraction())
    }

    pub fn quantile(&self, q: QuantileSpec) -> Result<i64> {
        if self.revealed == 0 {
            return Err(Error::Empty("oracle"));
        }
        // smallest slot whose prefix count reaches the target rank
        let mut remaining = q.target_rank(self.len());
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] < remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        Ok(self.distinct[pos])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitRng;
    use proptest::prelude::*;
    use rand::Rng;

    fn q(h: u64, k: u64) -> QuantileSpec {
        QuantileSpec::new(h, k).unwrap()
    }

    #[test]
    fn quantile_examples() {
        let o = OracleState::from_values([4, 1, 3, 2]);
        assert_eq!(o.quantile(q(1, 2)).unwrap(), 3);
        let o = OracleState::from_values([5, 3, 1, 2, 4]);
        assert_eq!(o.quantile(q(1, 2)).unwrap(), 3);
        let o = OracleState::from_values((1..=10).map(|i| i * 10));
        assert_eq!(o.quantile(q(9, 10)).unwrap(), 100);
        assert!(OracleState::new().quantile(q(1, 2)).is_err());
    }

    #[test]
    fn mass_error_examples() {
        let o = OracleState::from_values(1..=100);
        // 89 items below 90
        assert!((o.mass_error(90, q(9, 10)).unwrap() - (-0.01)).abs() < 1e-12);
        assert_eq!(o.mass_error(-5, q(1, 2)).unwrap(), -0.5);
        assert_eq!(o.mass_error(1000, q(1, 2)).unwrap(), 0.5);
        assert!(OracleState::new().mass_error(1, q(1, 2)).is_err());
    }

    #[test]
    fn insert_keeps_sorted() {
        let mut o = OracleState::new();
        for v in [5, 1, 5, -3, 9, 0] {
            o.insert(v);
        }
        assert_eq!(o.sorted(), &[-3, 0, 1, 5, 5, 9]);
        assert_eq!(o.count_below(5), 3);
    }

    #[test]
    fn prefix_oracle_matches_sorted_oracle() {
        let mut rng = SplitRng::new(4);
        let stream: Vec<i64> = (0..3000).map(|_| rng.gen_range(-50..50)).collect();
        let mut prefix = PrefixOracle::new(&stream);
        let mut sorted = OracleState::new();
        for (i, &v) in stream.iter().enumerate() {
            prefix.advance();
            sorted.insert(v);
            if i % 97 == 0 || i == stream.len() - 1 {
                for h in 1..10 {
                    assert_eq!(prefix.quantile(q(h, 10)).unwrap(), sorted.quantile(q(h, 10)).unwrap());
                }
                for x in [-60, -50, -1, 0, 17, 49, 50, 80] {
                    assert_eq!(prefix.count_below(x), sorted.count_below(x));
                }
            }
        }
    }

    #[test]
    fn upper_convention_is_not_always_closest() {
        // n = 3, q = 9/10: the oracle picks F = 2/3 while anything above the
        // maximum reaches F = 1, which is closer to 0.9.
        let o = OracleState::from_values([1, 2, 3]);
        let quant = q(9, 10);
        let own = o.mass_error(o.quantile(quant).unwrap(), quant).unwrap().abs();
        assert!(own > o.mass_error(4, quant).unwrap().abs());
    }

    proptest! {
        // The returned item's rank range always covers the target rank.
        #[test]
        fn oracle_output_covers_target_rank(
            values in prop::collection::vec(-30i64..30, 1..60),
            h in 1u64..10,
        ) {
            let quant = q(h, 10);
            let o = OracleState::from_values(values.iter().copied());
            let x = o.quantile(quant).unwrap();
            let rank = quant.target_rank(o.len());
            let le = values.iter().filter(|&&v| v <= x).count() as u64;
            prop_assert!(o.count_below(x) < rank && rank <= le);
        }

        // For distinct items and the median no other value has a smaller
        // |mass error|.
        #[test]
        fn median_of_distinct_items_has_smallest_error(
            values in prop::collection::btree_set(-30i64..30, 1..60),
        ) {
            let quant = q(1, 2);
            let o = OracleState::from_values(values.iter().copied());
            let best = o.mass_error(o.quantile(quant).unwrap(), quant).unwrap().abs();
            for x in -32..32 {
                prop_assert!(best <= o.mass_error(x, quant).unwrap().abs() + 1e-12);
            }
        }
    }
}
