use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target h/k-quantile, kept as a rational so thresholds are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct QuantileSpec {
    h: u64,
    k: u64,
}

impl QuantileSpec {
    pub const MEDIAN: QuantileSpec = QuantileSpec { h: 1, k: 2 };

    pub fn new(h: u64, k: u64) -> Result<Self> {
        if h == 0 || k < 2 || h >= k {
            return Err(Error::InvalidQuantile { h, k });
        }
        Ok(QuantileSpec { h, k })
    }

    pub fn median() -> Self {
        Self::MEDIAN
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// h/k as a float.
    pub fn fraction(&self) -> f64 {
        self.h as f64 / self.k as f64
    }

    /// (k-h)/k, the draw a larger item must exceed to move the estimate up.
    pub fn complement(&self) -> f64 {
        (self.k - self.h) as f64 / self.k as f64
    }

    /// 1-based rank of the q-quantile in a sorted sample of `n >= 1` items:
    /// the upper element when q*n is integral, otherwise ceil(q*n). Both
    /// cases reduce to floor(q*n) + 1, which is at most n since q < 1.
    pub fn target_rank(&self, n: u64) -> u64 {
        (self.h as u128 * n as u128 / self.k as u128) as u64 + 1
    }
}

impl fmt::Display for QuantileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.h, self.k)
    }
}

impl FromStr for QuantileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (h, k) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::QuantileSyntax(s.to_string()))?;
        let h = h.trim().parse().map_err(|_| Error::QuantileSyntax(s.to_string()))?;
        let k = k.trim().parse().map_err(|_| Error::QuantileSyntax(s.to_string()))?;
        QuantileSpec::new(h, k)
    }
}

impl TryFrom<String> for QuantileSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QuantileSpec> for String {
    fn from(q: QuantileSpec) -> String {
        q.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_fractions() {
        assert!(QuantileSpec::new(0, 2).is_err());
        assert!(QuantileSpec::new(2, 2).is_err());
        assert!(QuantileSpec::new(3, 2).is_err());
        assert!(QuantileSpec::new(1, 1).is_err());
        assert!(QuantileSpec::new(9, 10).is_ok());
    }

    #[test]
    fn parses_and_prints() {
        let q: QuantileSpec = "9/10".parse().unwrap();
        assert_eq!((q.h(), q.k()), (9, 10));
        assert_eq!(q.to_string(), "9/10");
        assert!("0.5".parse::<QuantileSpec>().is_err());
        assert!("1/x".parse::<QuantileSpec>().is_err());
        assert_eq!(QuantileSpec::median(), "1/2".parse().unwrap());
    }

    #[test]
    fn target_rank_follows_upper_convention() {
        let med = QuantileSpec::median();
        assert_eq!(med.target_rank(4), 3);
        assert_eq!(med.target_rank(5), 3);
        assert_eq!(med.target_rank(1), 1);
        let p90 = QuantileSpec::new(9, 10).unwrap();
        assert_eq!(p90.target_rank(10), 10);
        assert_eq!(p90.target_rank(11), 10);
    }

    #[test]
    fn serde_uses_slash_form() {
        let q = QuantileSpec::new(9, 10).unwrap();
        assert_eq!(serde_json::to_string(&q).unwrap(), "\"9/10\"");
        let back: QuantileSpec = serde_json::from_str("\"1/2\"").unwrap();
        assert_eq!(back, QuantileSpec::MEDIAN);
    }
}
