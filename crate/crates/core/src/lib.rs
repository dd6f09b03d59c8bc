//! Streaming quantile estimation with one or two words of state per group.
//!
//! The crate provides the frugal estimators ([`Frugal1U`], [`Frugal2U`]),
//! three memory-budgeted baselines (Greenwald-Khanna, q-digest, selection),
//! replayable stream sources, and an evaluation harness built around an
//! exact quantile oracle and a per-key GROUPBY table.

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod frugal;
pub mod quantile;
pub mod rng;
pub mod stream;

pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorKind, Init, MemoryUsage};
pub use frugal::{Direction, Frugal1U, Frugal2U, StepFunction};
pub use quantile::QuantileSpec;
pub use stream::{StreamItem, StreamSpec};
