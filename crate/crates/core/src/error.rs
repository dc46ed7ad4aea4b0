use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("coordinate and parameter names overlap: `{0}`")]
    NameClash(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {smallest})")]
    MetricNotSpd { point: Vec<f64>, smallest: f64 },
    #[error("metric is degenerate or not Lorentzian at {0:?}")]
    MetricDegenerate(Vec<f64>),
    #[error("unknown scalar field `{0}`")]
    UnknownField(String),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("operation requires a standard static space-time")]
    WrongKind,
    #[error("invalid warping function: {0}")]
    InvalidWarp(String),
    #[error("trajectory left the domain at r = {r_exit}")]
    BoundaryExit { r_exit: f64 },
    #[error("integrator failed at r = {r}: {message}")]
    StepFailure { r: f64, message: String },
    #[error("spatial direction has zero length")]
    ZeroSpatialDirection,
    #[error("trajectory is not null (|g(v,v)| = {0:e})")]
    NotNull(f64),
    #[error("value {0} lies outside (-1, 1)")]
    OutOfInterval(f64),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("invalid spec file: {0}")]
    SpecFile(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
