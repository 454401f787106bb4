use thiserror::Error;

/// Errors raised by model construction, the eigensolvers and the quench engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty basis: {0}")]
    EmptyBasis(String),

    #[error("basis state (n = {n}, 2m = {two_m}) is not part of the basis")]
    StateNotInBasis { n: u32, two_m: i32 },

    #[error("eigensolver failed to converge (dimension {dim}, matrix fingerprint {fingerprint:016x})")]
    NoConvergence { dim: usize, fingerprint: u64 },

    #[error(
        "initial eigenstate {index} at lambda = {lambda} lies in a degenerate cluster \
         (levels {first}..={last}); shift lambda_i or use cluster-invariant quantities"
    )]
    DegenerateInitialState {
        index: usize,
        lambda: f64,
        first: usize,
        last: usize,
    },

    #[error("eigenstate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("explicit basis-state initial states require lambda_i = 0 (got {0})")]
    ExplicitStateNeedsZeroLambda(f64),

    #[error("least-squares fit is singular: {0}")]
    SingularFit(String),

    #[error("smoothed level density vanishes at E = {energy} inside the strength support")]
    VanishingDensity { energy: f64 },

    #[error("critical-subspace curves need omega > omega0 (omega = {omega}, omega0 = {omega0})")]
    NotDetuned { omega: f64, omega0: f64 },

    #[error("photon truncation n_max = {n_max} not converged: weight {weight:e} within 3 of the cutoff")]
    Truncation { n_max: u32, weight: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
