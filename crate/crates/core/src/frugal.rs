//! One- and two-word quantile estimators.
//!
//! Both estimators are plain `Copy` values. Randomness is injected: each
//! update takes exactly one draw in `[0, 1]`, shared by the larger-item and
//! smaller-item branches, so updates are pure functions of
//! `(state, quantile, item, draw)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::QuantileSpec;

fn check_rand(rand: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rand) {
        Ok(())
    } else {
        Err(Error::RandOutOfRange(rand))
    }
}

/// One-word estimator: the estimate drifts by one unit toward items that
/// fall on the "unexpected" side of the target quantile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frugal1U {
    estimate: i64,
}

impl Frugal1U {
    /// Estimate starting at zero.
    pub fn new() -> Self {
        Self::default()
    }

    /// Estimate starting at `value`, typically the first stream item.
    pub fn starting_at(value: i64) -> Self {
        Frugal1U { estimate: value }
    }

    pub fn estimate(&self) -> i64 {
        self.estimate
    }

    /// Deterministic median drift: every item different from the estimate
    /// moves it one unit toward the item.
    pub fn update_median(&mut self, item: i64) {
        if item > self.estimate {
            self.estimate += 1;
        } else if item < self.estimate {
            self.estimate -= 1;
        }
    }

    /// General h/k update. A larger item moves the estimate up when
    /// `rand > 1 - h/k`; a smaller item moves it down when `rand > h/k`.
    pub fn update(&mut self, q: QuantileSpec, item: i64, rand: f64) -> Result<()> {
        check_rand(rand)?;
        if item > self.estimate && rand > q.complement() {
            self.estimate += 1;
        } else if item < self.estimate && rand > q.fraction() {
            self.estimate -= 1;
        }
        Ok(())
    }
}

/// Step-size adjustment applied on each triggered two-word update.
///
/// Only the constant additive schedule is provided; the enum is the hook
/// for other schedules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepFunction {
    #[default]
    ConstantAdditive,
}

impl StepFunction {
    pub fn eval(&self, _step: i64) -> i64 {
        match self {
            StepFunction::ConstantAdditive => 1,
        }
    }
}

/// Direction of the most recent triggered two-word update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[default]
    Up,
    Down,
}

/// Two-word estimator with an adaptive step and a direction bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frugal2U {
    estimate: i64,
    step: i64,
    sign: Direction,
}

impl Default for Frugal2U {
    fn default() -> Self {
        Frugal2U {
            estimate: 0,
            step: 1,
            sign: Direction::Up,
        }
    }
}

impl Frugal2U {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(value: i64) -> Self {
        Frugal2U {
            estimate: value,
            ..Self::default()
        }
    }

    /// Builds an arbitrary state; used to replay traces from a given point.
    pub fn from_parts(estimate: i64, step: i64, sign: Direction) -> Self {
        Frugal2U { estimate, step, sign }
    }

    pub fn estimate(&self) -> i64 {
        self.estimate
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn sign(&self) -> Direction {
        self.sign
    }

    pub fn update(&mut self, q: QuantileSpec, item: i64, rand: f64) -> Result<()> {
        self.update_with(StepFunction::default(), q, item, rand)
    }

    pub fn update_with(&mut self, f: StepFunction, q: QuantileSpec, item: i64, rand: f64) -> Result<()> {
        check_rand(rand)?;
        if item > self.estimate && rand > q.complement() {
            let delta = f.eval(self.step);
            self.step += match self.sign {
                Direction::Up => delta,
                Direction::Down => -delta,
            };
            self.estimate = self.estimate.saturating_add(self.step.max(1));
            if self.estimate > item {
                self.step += item - self.estimate;
                self.estimate = item;
            }
            if self.sign == Direction::Down && self.step > 1 {
                self.step = 1;
            }
            self.sign = Direction::Up;
        } else if item < self.estimate && rand > q.fraction() {
            let delta = f.eval(self.step);
            self.step += match self.sign {
                Direction::Down => delta,
                Direction::Up => -delta,
            };
            self.estimate = self.estimate.saturating_sub(self.step.max(1));
            if self.estimate < item {
                self.step += self.estimate - item;
                self.estimate = item;
            }
            if self.sign == Direction::Up && self.step > 1 {
                self.step = 1;
            }
            self.sign = Direction::Down;
        }
        Ok(())
    }
}
