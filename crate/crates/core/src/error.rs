use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("weight evaluated outside its domain at {point:?}")]
    Domain { point: Vec<f64> },

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("operation requires the Gaussian soliton ambient, got weight `{0}`")]
    WrongAmbient(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("mode truncation too small: {0}")]
    Truncation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
