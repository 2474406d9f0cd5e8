use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("vector length {len} is not a triangular number")]
    NotTriangular { len: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("LMI block ({row}, {col}) is not the transpose of block ({col}, {row})")]
    AsymmetricStructure { row: usize, col: usize },
    #[error("unknown decision block `{0}`")]
    UnknownBlock(String),
    #[error("malformed program dump at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
