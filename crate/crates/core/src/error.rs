use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A request exceeded a configured or physical capacity limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A range query with `hi < lo`.
    #[error("empty range: lo={lo} > hi={hi}")]
    EmptyRange { lo: u64, hi: u64 },

    /// A bound was evaluated below its validity threshold.
    #[error("{id}: x={x} below validity threshold {valid_from}")]
    Validity { id: String, x: f64, valid_from: f64 },

    /// A bound denominator was zero or negative at the evaluation point.
    #[error("singular denominator: {0}")]
    Singularity(String),

    /// A resume report does not match the scan policy it is resumed under.
    #[error("resume mismatch: {0}")]
    Resume(String),

    /// A report does not cover the ranges a conclusion requires.
    #[error("incomplete coverage: {0}")]
    Coverage(String),

    /// A scan found counterexamples; carries the smallest failing p_k.
    #[error("criterion refuted: smallest failing p_k = {smallest_pk} ({count} counterexamples)")]
    Refuted { smallest_pk: u64, count: usize },

    /// Consecutive chain rows do not join.
    #[error("chain broken at row {index}: s={s_prev} next r={r_next}")]
    ChainBroken { index: usize, s_prev: f64, r_next: f64 },

    /// An integer search exhausted its cap without finding a threshold.
    #[error("search cap {cap} exceeded: {what}")]
    SearchCap { what: String, cap: u64 },

    /// Malformed on-disk data (cache file, checkpoint line).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
