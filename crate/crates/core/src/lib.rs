//! Matrix-free solvers and parallel-in-time preconditioners for the
//! all-at-once discretization of distributed optimal control of wave
//! equations, plus the spectral toolkit used to verify the eigenvalue
//! localization and clustering behind them.

pub mod eigen;
pub mod error;
pub mod experiments;
pub mod krylov;
pub mod operators;
pub mod precond;
pub mod problem;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, RunRecord};
pub use krylov::{minres, minres_unpreconditioned, SolveReport};
pub use operators::{BlockToeplitzT, LinearOperator, NegativeLaplacian, SaddleOperator};
pub use precond::{PrecondKind, SpdPreconditioner};
pub use problem::{BlockVector, GridSpec, SpatialDim, WaveControlProblem};
pub use spectral::{SpectralReport, SymbolEvaluator};
