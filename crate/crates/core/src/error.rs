use thiserror::Error;

/// Errors produced by solvers, preconditioners and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}: requested size {requested} exceeds the desk-scale guard {limit}")]
    SizeGuard {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:.3e} exceeds {tol:.3e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("matrix is not positive definite (found eigenvalue {0:.6e})")]
    NotPositiveDefinite(f64),

    #[error("eigensolver failed to converge within {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("no exact solution attached to this problem")]
    MissingExactSolution,

    #[error(
        "result expected to be real: imaginary residue {residue:.3e} exceeds bound {bound:.3e}"
    )]
    ComplexResidue { residue: f64, bound: f64 },

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("unknown preconditioner `{0}` (expected abs-h|strang|tau|mod-strang|mod-tau|none)")]
    UnknownPreconditioner(String),

    #[error("unknown problem preset `{0}` (expected example-1d|example-2d)")]
    UnknownProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
