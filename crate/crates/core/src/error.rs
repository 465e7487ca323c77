use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected through nodes {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("assignment is partial: node `{0}` has no state")]
    PartialAssignment(String),

    #[error("assignment covers {got} nodes but the network has {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("state {state} out of range for node `{node}` with cardinality {cardinality}")]
    StateOutOfRange {
        node: String,
        state: usize,
        cardinality: usize,
    },

    #[error("impossible evidence: the evidence has probability zero")]
    ImpossibleEvidence,

    #[error("no mass consistent with evidence: every sample had zero weight")]
    NoMassConsistentWithEvidence,

    #[error("joint state space of {states} configurations exceeds the enumeration cap of {cap}")]
    EnumerationCap { states: f64, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("history window has {got} slices but the model needs {needed}")]
    WindowTooShort { needed: usize, got: usize },

    #[error("history window is missing a value for `{variable}` at slice {slice}; use the grid-search fallback")]
    MissingHistory { variable: String, slice: usize },

    #[error("series of length {len} is too short for order {order}")]
    SeriesTooShort { len: usize, order: usize },

    #[error("column `{0}` has no observed values")]
    EmptyColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("time column is not strictly increasing at row {0}")]
    NonMonotonicTime(usize),

    #[error("unknown label {label:?} for categorical column `{column}`")]
    UnknownLabel { column: String, label: String },

    #[error("all observations are zero; percentage errors are undefined")]
    AllZeroObservations,

    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("model file: {0}")]
    InvalidModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
