use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} qubits, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid qubit count {n}: {reason}")]
    InvalidQubitCount { n: usize, reason: &'static str },

    #[error("invalid Pauli axis {0:?}")]
    InvalidAxis(char),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("CNOT control and target are both qubit {0}")]
    SameControlTarget(usize),

    #[error("unsupported measurement basis {0} (only X and Y are measured)")]
    UnsupportedBasis(char),

    #[error("coefficient table disagrees with the recursion at n = {n}: {detail}")]
    TableInconsistent { n: usize, detail: String },

    #[error("brute-force LHV search refused for n = {n} (limit {limit})")]
    TooManyQubits { n: usize, limit: usize },

    #[error("expectation has imaginary part {0:e}; operator is not Hermitian")]
    ImaginaryExpectation(f64),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),

    #[error("chain {0} is not a path in the coupling graph")]
    NotAPath(String),

    #[error("cannot summarize an empty set of records")]
    EmptyRecords,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
