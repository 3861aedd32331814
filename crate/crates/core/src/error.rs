use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("trace error: {0}")]
    Trace(String),

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("search space error: {0}")]
    Space(String),

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("mutation failed after {0} retries")]
    Mutation(usize),

    #[error("graph too large for brute-force isomorphism: {nodes} nodes (max {max})")]
    Size { nodes: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("comparator sort exceeded its bound of {0} comparisons")]
    Sort(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}, record {id}: {msg}")]
    Record {
        line: usize,
        id: String,
        msg: String,
    },

    #[error("evaluator has no entry for architecture {0}")]
    Eval(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}
