use thiserror::Error;

/// Errors produced across the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix has all entries equal; Z = q^|V| * c^|E| is trivial")]
    ConstantMatrix,
    #[error("matrix is identically zero")]
    AllZero,
    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("value out of range: {0}")]
    InvalidRange(String),

    #[error("infeasible graph parameters: {0}")]
    Infeasible(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("vertex {vertex} is not on side {side}")]
    SideViolation { vertex: usize, side: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sample count must be positive")]
    InvalidSampleCount,
    #[error("accuracy must lie in (0, 1), got {0}")]
    InvalidAccuracy(f64),
    #[error("ratio estimate for vertex {0} is zero after resampling")]
    DegenerateRatio(usize),
    #[error("boundary normalizer F_u vanished at vertex {0}")]
    ZeroNormalizer(usize),
    #[error("premises not met: {0}")]
    PremisesUnmet(String),

    #[error("invalid polymer: {0}")]
    InvalidPolymer(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
