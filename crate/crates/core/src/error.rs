use thiserror::Error;

use crate::types::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is empty")]
    Empty,

    #[error("length mismatch: {left} labels but {right} values")]
    LengthMismatch { left: usize, right: usize },

    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("class weights must be finite and positive, got ({v1}, {v2})")]
    InvalidWeights { v1: f64, v2: f64 },

    #[error("invalid scoring rule: {0}")]
    InvalidRule(String),

    #[error("cost for {label} at q = {q} requires an endpoint integral declared divergent")]
    NotIntegrable { label: Label, q: f64 },

    #[error("density integrates to {integral}, expected 1")]
    NotNormalized { integral: f64 },

    #[error("both classes are required, got {targets} targets and {nontargets} non-targets")]
    SingleClass { targets: u64, nontargets: u64 },

    #[error("score at index {index} is not finite ({score})")]
    NonFiniteScore { index: usize, score: f64 },

    #[error("prior log-odds must be finite, got {0}")]
    NonFinitePrior(f64),

    #[error("grid search refused: {len} trials on a {grid}-point grid exceeds the exhaustive limit")]
    TooLarge { len: usize, grid: usize },

    #[error("max-min and min-max disagree at index {index}: {maxmin} vs {minmax}")]
    OracleDisagreement { index: usize, maxmin: f64, minmax: f64 },

    #[error("map file line {line}: {message}")]
    MapFormat { line: usize, message: String },

    #[error("invalid calibration map: {0}")]
    InvalidMap(String),
}
