use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("coefficient is not strictly accretive: bound {bound:.3e}")]
    NotAccretive { bound: f64 },
    #[error("singular coefficient: min |a(x)| = {min_abs:.3e}")]
    SingularCoefficient { min_abs: f64 },
    #[error("bisectoriality failure: eigenvalue margin {margin:.3e} below {floor:.1e}")]
    Bisectoriality { margin: f64, floor: f64 },
    #[error("unreliable spectral decomposition: reconstruction {reconstruction:.3e}, cond {cond:.3e}")]
    Unreliable { reconstruction: f64, cond: f64 },
    #[error("block {block} is singular in the s = {s} topology: min singular value {sigma:.3e}")]
    SingularBlock { block: &'static str, s: f64, sigma: f64 },
    #[error("coefficient block class is {found}, {expected} required (use force to override)")]
    BlockClass { expected: &'static str, found: &'static str },
    #[error("field is not in the curl-free space: {0}")]
    NotInH0(String),
    #[error("data has a P- component of relative size {ratio:.3e}")]
    WrongSubspace { ratio: f64 },
    #[error("ill-posed restricted system: condition number {cond:.3e}")]
    IllPosed { cond: f64 },
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("expression evaluation: {0}")]
    Eval(String),
    #[error("linear algebra: {0}")]
    Linalg(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Bisectoriality { .. }
                | Error::Unreliable { .. }
                | Error::SingularBlock { .. }
                | Error::IllPosed { .. }
                | Error::Quadrature(_)
                | Error::Linalg(_)
                | Error::Solver(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
