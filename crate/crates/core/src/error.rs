use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model point: {0}")]
    InvalidPoint(String),

    #[error("outside injectivity domain: {0}")]
    InjectivityDomain(String),

    #[error("vector is not tangent at base point (defect {0:e})")]
    NotTangent(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("degenerate element {index}: {msg}")]
    Degenerate { index: usize, msg: String },

    #[error("mesh is closed: {0}")]
    ClosedMesh(String),

    #[error("invalid shape parameters: {0}")]
    InvalidShape(String),

    #[error("rank-deficient curvature fit at vertex {0}")]
    RankDeficientFit(usize),

    #[error("tensor error: {0}")]
    Tensor(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("center of mass iteration failed: {0}")]
    CenterOfMass(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
