//! Block-sparse recovery with total-variation regularized sparse Bayesian
//! learning in log-variance coordinates.
//!
//! The solver works on `Y = H X + N` with complex `H` (M x N), `X` (N x L)
//! and white noise of variance `lambda`. Each row of `X` has prior variance
//! `gamma_n = exp(z_n)`; a total-variation penalty on `z` favours block
//! structure in the support.
//!
//! ```no_run
//! use expdol::{scenarios, solver};
//!
//! let (problem, support) = scenarios::generate_synthetic(&scenarios::SyntheticSpec::default())?;
//! let result = solver::run(&problem, &solver::SolverConfig::default())?;
//! let f1 = expdol::metrics::f1_support(&support, &result.x_hat, expdol::metrics::DEFAULT_DELTA);
//! println!("F1 = {f1:.3}");
//! # Ok::<(), expdol::Error>(())
//! ```

pub mod error;
pub mod linalg;
pub mod matrix_io;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod scenarios;
pub mod solver;

#[cfg(feature = "checks")]
pub mod checks;

pub mod experiment;

#[cfg(test)]
mod test_util;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use model::{DifferenceMatrix, Hyperparameters, ProblemInstance};
pub use objective::{CostBreakdown, PriorConfig};
pub use solver::{baseline_sbl, run, NoiseMode, RecoveryResult, SolverConfig};
