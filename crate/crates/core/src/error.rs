//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty item set")]
    EmptyItemSet,

    #[error("item {item}: empty outcome set")]
    EmptyOutcomeSet { item: usize },

    #[error("item {item}: negative probability {value} for outcome {outcome}")]
    NegativeProbability {
        item: usize,
        outcome: usize,
        value: f64,
    },

    #[error("item {item}: probabilities sum to {sum} != 1")]
    PriorSumMismatch { item: usize, sum: f64 },

    #[error("duplicate item label {label:?}")]
    DuplicateLabel { label: String },

    #[error("index {index} out of range for ground size {ground}")]
    IndexOutOfRange { index: usize, ground: usize },

    #[error("item {item}: outcome {outcome} out of range ({count} outcomes)")]
    OutcomeOutOfRange {
        item: usize,
        outcome: usize,
        count: usize,
    },

    #[error("observation has probability zero (item {item}, outcome {outcome})")]
    ZeroProbabilityObservation { item: usize, outcome: usize },

    #[error("item {item} already observed")]
    ItemAlreadyObserved { item: usize },

    #[error("instance too large to check exhaustively ({states} partial-realization states > cap {cap})")]
    TooLargeToCheck { states: usize, cap: usize },

    #[error("ground too large ({ground} items > cap {cap})")]
    GroundTooLarge { ground: usize, cap: usize },

    #[error("system not downward-closed: {superset:?} is independent but {subset:?} is not")]
    NotDownwardClosed {
        superset: Vec<usize>,
        subset: Vec<usize>,
    },

    #[error("instance exceeds oracle caps ({items} items vs max {max_items}, {outcomes} outcomes vs max {max_outcomes})")]
    OracleCapsExceeded {
        items: usize,
        max_items: usize,
        outcomes: usize,
        max_outcomes: usize,
    },

    #[error("instance too large for exact evaluation ({worlds} realizations > cap {cap})")]
    EvalCapExceeded { worlds: usize, cap: usize },

    #[error("mismatched ground sizes ({left} vs {right})")]
    MismatchedGroundSizes { left: usize, right: usize },

    #[error("cannot intersect an empty list of systems")]
    EmptyIntersection,

    #[error("instance parts disagree: {0}")]
    InconsistentInstance(String),

    #[error("declared p = {declared} but exhaustive estimation found {found}")]
    DeclaredPMismatch { declared: String, found: String },

    #[error("samples must be at least 2 (got {0})")]
    TooFewSamples(usize),

    #[error("no p available: ground exceeds the estimation cap and no declared_p was provided")]
    NoPAvailable,

    #[error("unknown objective kind {kind:?}")]
    UnknownObjectiveKind { kind: String },

    #[error("unknown constraint kind {kind:?}")]
    UnknownConstraintKind { kind: String },

    #[error("unknown generator kind {kind:?}")]
    UnknownGeneratorKind { kind: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(Box<Error>),

    #[error("{0}")]
    InvalidSpec(String),

    #[error("cannot serialize a custom {0} to an instance file")]
    UnserializableCustom(&'static str),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Wraps a module error as a load-time validation failure.
    pub fn validation(inner: Error) -> Self {
        Error::Validation(Box::new(inner))
    }
}
