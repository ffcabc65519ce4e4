use thiserror::Error;

/// Errors raised while reading a graph description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("field `vertices`: graph must have at least one vertex")]
    NoVertices,
    #[error("field `vertices`: duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("field `{field}`: negative edge count {value}")]
    NegativeCount { field: String, value: i64 },
    #[error("field `{field}`: edge count {value} is not a finite non-negative integer")]
    InvalidCount { field: String, value: String },
    #[error("field `matrix`: expected {expected}x{expected} matrix, row {row} has {found} entries")]
    NonSquare {
        expected: usize,
        row: usize,
        found: usize,
    },
    #[error("field `{field}`: unknown vertex `{label}`")]
    UnknownVertex { field: String, label: String },
    #[error("field `{field}`: unknown edge `{label}`")]
    UnknownEdge { field: String, label: String },
    #[error("field `edges`: duplicate edge label `{0}`")]
    DuplicateEdgeLabel(String),
    #[error("input must contain exactly one of `matrix` or `edges`")]
    AmbiguousFormat,
    #[error("invalid beta `{0}`: expected a real number or `log:<x>` with x > 0")]
    Beta(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("matrix is not a non-negative square matrix: {0}")]
    InvalidMatrix(String),
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },
    #[error("matrix is reducible")]
    Reducible,
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("closed form {closed} and truncated sum {truncated} disagree beyond {tolerance}")]
    Inconsistent {
        closed: f64,
        truncated: f64,
        tolerance: f64,
    },
    #[error("truncated Fock space would have {dimension} basis vectors (cap {cap})")]
    DimensionCap { dimension: u128, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
