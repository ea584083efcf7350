use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear system is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("moving-average factorization did not converge within {0} iterations")]
    MaNoConvergence(usize),

    #[error("autocovariance sequence is not factorable (offending value {0:.3e})")]
    IndefinitePsi(f64),

    #[error("model is not stationary: companion spectral radius {0}")]
    UnstableModel(f64),

    #[error("no feasible model order on the search grid")]
    NoFeasibleFit,

    #[error("root mapping produced complex coefficients (imaginary residual {0:.3e})")]
    RescaleFailed(f64),

    #[error("gain iteration did not converge within {iterations} iterations (last covariance delta {last_delta:.3e})")]
    GainNoConvergence { iterations: usize, last_delta: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
