//! Privacy-utility machinery for semantic communication with a blind
//! privacy encoder.
//!
//! An upstream encoder discloses a semantic `F = f(X)` of the source; a
//! second encoder holding private data `S` releases `U` through a channel
//! `P(U | S, F)` under the leakage constraint `I(U; S) <= ε`. The user cares
//! about a task `H = h(X)`. This crate provides
//!
//! * [`probcore`]: exact entropies and (conditional) mutual information on finite tables,
//! * [`frl`]: the interval-refinement functional representation plus randomized
//!   response, which reaches leakage exactly `ε`,
//! * [`bounds`]: closed-form lower/upper bounds on the trade-off and on the task utility,
//! * [`oracle`]: a multi-start search that lower-bounds the trade-off numerically,
//! * [`dataset`]: MNIST IDX ingestion and the digit / quantized-histogram joint.
//!
//! All quantities are in nats.

pub mod bounds;
pub mod dataset;
mod error;
pub mod frl;
pub mod oracle;
pub mod probcore;

pub use error::{Error, IdxError, Result};

/// Conventional axis names used across modules.
pub mod axes {
    /// Private data.
    pub const S: &str = "S";
    /// Semantic disclosed by the first encoder.
    pub const F: &str = "F";
    /// Task requested by the user.
    pub const H: &str = "H";
    /// Released data.
    pub const U: &str = "U";
}
