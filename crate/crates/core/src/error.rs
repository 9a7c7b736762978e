use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrilateral is not strictly convex and counterclockwise: {reason}")]
    NonConvex { reason: String },

    #[error("quadrilateral is degenerate (r x s = {cross_rs:e} below floor {floor:e})")]
    Degenerate { cross_rs: f64, floor: f64 },

    #[error("quadrature degree {degree} exceeds the supported maximum {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("degree of freedom expects a {expected} field")]
    FieldKindMismatch { expected: &'static str },

    #[error("no free degrees of freedom after applying boundary conditions")]
    EmptyInterior,

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{dofs} degrees of freedom exceed the dense-check limit {limit}")]
    TooLargeForDense { dofs: usize, limit: usize },

    #[error("malformed mesh: {0}")]
    MeshFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
