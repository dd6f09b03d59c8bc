//! Scoring and experiment plumbing: exact oracles, trajectories, canned
//! benchmarks, GROUPBY tables and the Monte-Carlo property checks.

pub mod bench;
pub mod experiment;
pub mod groupby;
pub mod oracle;
pub mod props;

pub use experiment::{run_experiment, ErrorRecord, ExperimentConfig, Trajectory};
pub use groupby::GroupTable;
pub use oracle::{OracleState, PrefixOracle};
pub use props::{property_suite, PropertyOutcome, PropertyTestConfig};
