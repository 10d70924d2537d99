use thiserror::Error;

/// Errors raised by simulation, protocol and analysis code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not unitary (deviation {deviation:.3e})")]
    Unitarity { deviation: f64 },
    #[error("index error: {0}")]
    Index(String),
    #[error("state of {requested} amplitudes exceeds capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("protocol step out of order: {0}")]
    ProtocolOrder(String),
    #[error("estimator found {0} bins over threshold")]
    EstimatorOverflow(usize),
    #[error("estimator found no bin over threshold")]
    EstimatorEmpty,
    #[error("quadrature did not reach tolerance {tolerance:e} within {evaluations} evaluations")]
    Quadrature { tolerance: f64, evaluations: usize },
    #[error("no trial survived conditioning")]
    DegenerateSample,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("harness error: {0}")]
    Harness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
