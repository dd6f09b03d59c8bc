//! Memory-budgeted comparison estimators.

pub mod gk;
pub mod qdigest;
pub mod selection;

pub use gk::{GkSummary, GkTuple};
pub use qdigest::QDigest;
pub use selection::{Phase, Selection};
