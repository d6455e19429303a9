//! Simulation and verification toolkit for restricted multiplicative
//! merging, the multiplicative coalescent, and near-critical stochastic
//! block models.
//!
//! The building blocks:
//!
//! * [`field`] — deterministic i.i.d. exponential(1) threshold table,
//!   addressed by `(seed, stream_id, edge)`, giving exact couplings.
//! * [`relation`] — symmetric relations on the positive integers and the
//!   transforms applied to them (shift, cut, union, classes).
//! * [`engine`] — the merge core: open an edge `{i, j} in R` when its
//!   threshold is at most `x_i * x_j * t`, read off ordered component
//!   masses; plus vector utilities.
//! * [`coalescent`] — event-driven jump-process simulator (pairwise merge
//!   rate `x_i * x_j`), an independent oracle for the graphical route.
//! * [`sbm`] — stochastic block model sampling, coupled and fast modes,
//!   and the near-critical rescaling.
//! * [`oracle`] — exhaustive enumeration of small instances: exact
//!   component laws, connectivity and disjoint-occurrence probabilities.
//! * [`bounds`] — closed-form bound calculators.
//! * [`stats`] — estimators, confidence intervals, two-sample and
//!   goodness-of-fit tests.
//! * [`checks`] — the verification suite wiring all of the above into
//!   machine-readable reports.

pub mod bounds;
pub mod checks;
pub mod coalescent;
pub mod engine;
pub mod field;
pub mod oracle;
pub mod relation;
pub mod sbm;
pub mod stats;

pub use engine::{ComponentVector, MassVector};
pub use field::{CounterRng, ThresholdField, Thresholds};
pub use relation::Relation;

/// Error type shared across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter left the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An exhaustive enumeration would be too large.
    #[error("enumeration over {edges} admissible edges exceeds the cap of {cap}")]
    Capacity { edges: usize, cap: usize },
    /// Malformed input (CLI or config spelling).
    #[error("usage error: {0}")]
    Usage(String),
}
