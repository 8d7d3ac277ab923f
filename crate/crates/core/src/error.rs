use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("offspring law is not critical: mean {mean} differs from 1 by more than 1e-9")]
    NonCriticalOffspring { mean: f64 },
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within 1e-12")]
    NotNormalized { sum: f64 },
    #[error("dilution parameter t = {0} outside [0, 1]")]
    InvalidT(f64),
    #[error("tree exceeded the size cap of {cap} vertices")]
    SizeCapExceeded { cap: usize },
    #[error("no tree with {n} vertices has positive probability under this offspring law")]
    UnreachableSize { n: usize },
    #[error("invalid Lukasiewicz excursion: {0}")]
    InvalidExcursion(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("car order is not a permutation of the car tokens: {0}")]
    InvalidOrder(String),
    #[error("no convergence after {iterations} iterations (last distance {last_distance:e})")]
    NoConvergence { iterations: usize, last_distance: f64 },
    #[error("insufficient support for tail fit: need {needed} reliable indices, have {available}")]
    InsufficientSupport { needed: usize, available: usize },
    #[error("model is not subcritical (theta = {theta})")]
    NotSubcritical { theta: f64 },
    #[error("model is not supercritical (theta = {theta})")]
    NotSupercritical { theta: f64 },
    #[error("degenerate Puiseux step at order {order}: linear coefficient {coefficient:e}")]
    DegenerateStep { order: usize, coefficient: f64 },
    #[error("Newton iteration diverged at x = {x} (last residual {residual:e})")]
    NewtonDiverged { x: f64, residual: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
