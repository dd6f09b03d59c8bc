//! Greenwald-Khanna summary with an optional hard tuple budget.
//!
//! Without a budget the summary behaves like the classic fixed-epsilon
//! algorithm. With a budget `t`, epsilon starts at `initial_eps` and is
//! raised in steps of 0.001 whenever compression cannot bring the tuple
//! count down to `t`. Epsilon is stored in thousandths so the bound
//! `floor(2 * eps * n)` is computed exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::QuantileSpec;

/// One summary entry: `g` is the gap to the previous tuple's minimum rank,
/// `delta` the spread between this tuple's minimum and maximum rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GkTuple {
    pub value: i64,
    pub g: u64,
    pub delta: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkSummary {
    tuples: Vec<GkTuple>,
    n: u64,
    eps_milli: u64,
    budget: Option<usize>,
    since_compress: u64,
}

impl GkSummary {
    /// Fixed-epsilon summary; `eps_milli` is epsilon in thousandths.
    pub fn with_epsilon(eps_milli: u64) -> Result<Self> {
        if eps_milli == 0 || eps_milli >= 1000 {
            return Err(Error::Config(format!(
                "GK epsilon must be in (0, 1), got {eps_milli}/1000"
            )));
        }
        Ok(GkSummary {
            tuples: Vec::new(),
            n: 0,
            eps_milli,
            budget: None,
            since_compress: 0,
        })
    }

    /// Budget-forced summary holding at most `t` tuples. Epsilon starts at
    /// 0.001.
    pub fn with_budget(t: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::Config(format!("GK tuple budget must be >= 2, got {t}")));
        }
        Ok(GkSummary {
            tuples: Vec::new(),
            n: 0,
            eps_milli: 1,
            budget: Some(t),
            since_compress: 0,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn tuples(&self) -> &[GkTuple] {
        &self.tuples
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn epsilon(&self) -> f64 {
        self.eps_milli as f64 / 1000.0
    }

    pub fn epsilon_milli(&self) -> u64 {
        self.eps_milli
    }

    /// floor(2 * eps * n)
    pub fn band(&self) -> u64 {
        ((2 * self.eps_milli as u128 * self.n as u128) / 1000) as u64
    }

    pub fn insert(&mut self, value: i64) {
        self.n += 1;
        let pos = self.tuples.partition_point(|t| t.value <= value);
        let delta = if pos == 0 || pos == self.tuples.len() {
            0
        } else {
            self.band().saturating_sub(1)
        };
        self.tuples.insert(pos, GkTuple { value, g: 1, delta });

        match self.budget {
            Some(t) => {
                if self.tuples.len() > t {
                    self.compress();
                    while self.tuples.len() > t {
                        self.eps_milli += 1;
                        self.compress();
                    }
                }
            }
            None => {
                self.since_compress += 1;
                let period = (1000 / (2 * self.eps_milli)).max(1);
                if self.since_compress >= period {
                    self.since_compress = 0;
                    self.compress();
                }
            }
        }
    }

    /// Right-to-left adjacent merge: tuple `i` folds into `i + 1` when
    /// `g_i + g_{i+1} + delta_{i+1} <= floor(2 eps n)`. The first tuple
    /// keeps the exact minimum and is never folded.
    fn compress(&mut self) {
        let band = self.band();
        if self.tuples.len() < 3 {
            return;
        }
        let mut i = self.tuples.len() - 2;
        while i >= 1 {
            let (cur, next) = (self.tuples[i], self.tuples[i + 1]);
            if cur.g + next.g + next.delta <= band {
                self.tuples[i + 1].g += cur.g;
                self.tuples.remove(i);
            }
            i -= 1;
        }
    }

    /// Returns a stored value whose rank range lies closest to the target
    /// rank of `q`.
    pub fn query(&self, q: QuantileSpec) -> Result<i64> {
        if self.n == 0 {
            return Err(Error::Empty("GK summary"));
        }
        let rank = q.target_rank(self.n) as i128;
        let mut rmin = 0i128;
        let mut best = (i128::MAX, self.tuples[0].value);
        for t in &self.tuples {
            rmin += t.g as i128;
            let rmax = rmin + t.delta as i128;
            let err = (rank - rmin).max(rmax - rank);
            if err < best.0 {
                best = (err, t.value);
            }
        }
        Ok(best.1)
    }

    /// Largest `g + delta` over all tuples.
    pub fn max_spread(&self) -> u64 {
        self.tuples.iter().map(|t| t.g + t.delta).max().unwrap_or(0)
    }

    /// Checks ordering, `sum g = n`, and `g + delta <= max(1, floor(2 eps n))`.
    /// A lone exact tuple (`g = 1, delta = 0`) is always admissible.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.tuples.windows(2).any(|w| w[0].value > w[1].value) {
            return Err("tuples out of order".into());
        }
        let total: u64 = self.tuples.iter().map(|t| t.g).sum();
        if total != self.n {
            return Err(format!("sum of g is {total}, expected {}", self.n));
        }
        let bound = self.band().max(1);
        if let Some(t) = self.tuples.iter().find(|t| t.g + t.delta > bound) {
            return Err(format!(
                "tuple {:?} exceeds g + delta <= {bound} (eps {}, n {})",
                t,
                self.epsilon(),
                self.n
            ));
        }
        if let Some(t) = self.budget {
            if self.tuples.len() > t {
                return Err(format!("{} tuples over budget {t}", self.tuples.len()));
            }
        }
        Ok(())
    }
}
