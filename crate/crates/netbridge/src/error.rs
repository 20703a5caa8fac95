use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("no convergence after {iterations} iterations (last gap {gap:.3e})")]
    Convergence { iterations: usize, gap: f64 },
    #[error("instance too large for enumeration: {0}")]
    Capacity(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
