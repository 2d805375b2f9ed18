//! Partial singular value decomposition of large sparse matrices by
//! thick-restart Jacobi–Davidson, with inner-preconditioned correction
//! equations, deflation and purgation.
//!
//! ```no_run
//! use ipjdsvd::{load_matrix_market, solve, SolverConfig};
//!
//! let a = load_matrix_market("matrix.mtx")?;
//! let run = solve(&a, &SolverConfig::new(0.0, 5))?;
//! for t in &run.triplets {
//!     println!("{:.12e}  {:.2e}", t.value, t.residual);
//! }
//! # Ok::<(), ipjdsvd::Error>(())
//! ```

pub mod audit;
pub mod cli;
pub mod dense;
pub mod error;
pub mod jdsvd;
pub mod market;
pub mod minres;
pub mod operator;
pub mod report;
pub mod sparse;

pub use error::{Error, Result};
pub use jdsvd::{solve, ConvergedTriplet, Mode, RunReport, SolverConfig, Termination};
pub use market::{load_matrix_market, read_matrix_market};
pub use minres::{minres, Minres, MinresOutcome, MinresStatus};
pub use operator::{assemble_reduced_op, make_projected_op, ProjectedAugmentedOp, ReducedOperator};
pub use sparse::{NormEstimates, Oriented, SparseMatrix};
