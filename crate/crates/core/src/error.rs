use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge ({i}, {j}) for a graph with {m} nodes")]
    InvalidEdge { i: usize, j: usize, m: usize },

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("generation gave up after {attempts} attempts with {unique} of {requested} unique graphs")]
    AttemptCapExceeded {
        attempts: usize,
        unique: usize,
        requested: usize,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("{n} qubits exceeds the bound of {max} for {what}")]
    TooManyQubits { n: usize, max: usize, what: &'static str },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate bandwidth: median pairwise Hamming distance is 0; set sigma explicitly")]
    DegenerateBandwidth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative probability {value:e} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
