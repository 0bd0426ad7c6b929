use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A grid could not be constructed or two grids are incompatible.
    #[error("grid error: {0}")]
    Grid(String),

    /// A requested evaluation time is not a node of the grid.
    #[error("t = {t} is not a grid node")]
    NodeNotOnGrid { t: f64 },

    /// Covariance factorization failed; `minor` is the offending leading minor.
    #[error("covariance factorization failed at leading minor {minor} (jitter retry exhausted)")]
    Factorization { minor: usize },

    /// The circulant embedding is not nonnegative definite beyond tolerance.
    #[error("circulant embedding eigenvalue {value:.6e} is negative beyond tolerance (relative {relative:.3e})")]
    EmbeddingEigenvalue { value: f64, relative: f64 },

    /// An exact method was asked for more nodes than its configured cap.
    #[error("{nodes} nodes exceeds the cap of {cap} for {what}")]
    TooManyNodes {
        nodes: usize,
        cap: usize,
        what: &'static str,
    },

    /// The operation is only defined on uniform grids.
    #[error("{0} requires a uniform grid")]
    NonUniformGrid(&'static str),

    /// Shape mismatch between paths, grids, or coefficient dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Euler iterate exceeded the blow-up guard.
    #[error("solution exceeded the blow-up guard at node {node} (t = {t})")]
    BlowUp { node: usize, t: f64 },

    /// A registry lookup failed.
    #[error("unknown coefficient family `{0}`")]
    UnknownFamily(String),

    /// A scenario configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A CSV artifact could not be parsed back into a path.
    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
