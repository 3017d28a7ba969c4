use thiserror::Error;

/// Errors raised while building meshes, spaces and complexes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("vertex index {index} out of range in cell {cell:?} (mesh has {count} vertices)")]
    IndexOutOfRange {
        cell: Vec<usize>,
        index: usize,
        count: usize,
    },
    #[error("duplicate cell {0:?}")]
    DuplicateCell(Vec<usize>),
    #[error("cell {0:?} is not a simplex: {1}")]
    NotASimplex(Vec<usize>, String),
    #[error("marked simplex {0:?} is not part of the complex")]
    MarkedNotInComplex(Vec<usize>),
    #[error("degenerate simplex {0:?} (zero volume)")]
    DegenerateSimplex(Vec<usize>),
    #[error("{face:?} is not a face of {cell:?}")]
    NotAFace { face: Vec<usize>, cell: Vec<usize> },
    #[error("simplex {0:?} is not in the complex")]
    UnknownSimplex(Vec<usize>),
    #[error("isolated vertex {0}: no adjacent edges")]
    IsolatedVertex(usize),
    #[error("{0} out of range")]
    OutOfRange(String),
    #[error("unknown catalog key `{0}`")]
    UnknownCatalog(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported family: {0}")]
    Family(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("form error: {0}")]
    Form(String),
    #[error("condition check failed: {0}")]
    Condition(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
