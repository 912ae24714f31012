use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("port index {index} out of range 1..={count}")]
    PortOutOfRange { index: usize, count: usize },

    #[error("invalid port grid: {0}")]
    InvalidGrid(String),

    #[error("correlation matrix is not factorizable: {0}")]
    NotFactorizable(String),

    #[error("Laguerre root {index} of order {order} did not converge")]
    RootFinding { order: usize, index: usize },

    #[error("quadrature order {0} outside 1..=200")]
    QuadratureOrder(usize),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("content {content} is not cached anywhere (q = 0)")]
    Uncached { content: usize },

    #[error("content {content} has vanishing success probability; delay is unbounded")]
    InfiniteDelay { content: usize },

    #[error("adaptive integration did not converge (estimate {estimate}, error {error})")]
    AdaptiveNonConvergence { estimate: f64, error: f64 },

    #[error("unknown sweep axis `{0}`")]
    InvalidAxis(String),
}
