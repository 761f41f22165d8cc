use thiserror::Error;

/// Errors raised by the probability, mechanism, bound and dataset routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` appears in more than one argument set")]
    AxisOverlap(String),

    #[error("alphabet mismatch on axis `{axis}`: {detail}")]
    AlphabetMismatch { axis: String, detail: String },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("leakage is not monotone in the truth-telling probability: I(p={p_lo}) = {leak_lo} > I(p={p_hi}) = {leak_hi}")]
    NonMonotoneLeakage {
        p_lo: f64,
        leak_lo: f64,
        p_hi: f64,
        leak_hi: f64,
    },

    #[error("leakage tuning missed the target: wanted {target}, reached {reached}")]
    TuningFailed { target: f64, reached: f64 },

    #[error("search guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("sandwich violated at epsilon = {epsilon}: lower margin {lower_margin:e}, upper margin {upper_margin:e}")]
    SandwichViolation {
        epsilon: f64,
        lower_margin: f64,
        upper_margin: f64,
    },

    #[error("internal invariant failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("label {0} is not a decimal digit")]
    BadLabel(u8),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Structured failures of the IDX decoder.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("{file}: bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        file: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{file}: truncated, expected {expected} bytes, found {found}")]
    Truncated {
        file: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
