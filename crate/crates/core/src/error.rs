use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e} vs max {max_eig:e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("non-positive SINR denominator {0:e} for UE {1}")]
    NonPositiveDenominator(f64, usize),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("linear program failure: {0}")]
    LinearProgram(String),

    #[error("infeasible power control problem: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::NotPsd { .. } => "not_psd",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::Quadrature(_) => "quadrature",
            Error::NonPositiveDenominator(..) => "non_positive_denominator",
            Error::Argument(_) => "argument",
            Error::LinearProgram(_) => "linear_program",
            Error::Infeasible(_) => "infeasible",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
