use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside the Laplace domain (Im λ = {0} > 0)")]
    OutsideDomain(f64),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("field blow-up: {0}")]
    BlowUp(String),
    #[error("numerical instability: {0}")]
    Unstable(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
