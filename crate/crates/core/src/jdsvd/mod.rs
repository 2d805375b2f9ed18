//! Jacobi–Davidson SVD with inner-preconditioned correction equations,
//! thick restart, deflation and purgation.

pub mod config;
pub mod correction;
pub mod restart;
pub mod ritz;
pub mod solver;
pub mod subspace;

pub use config::{Mode, SolverConfig};
pub use correction::{assemble_correction, inner_tolerance, select_cluster, Correction};
pub use restart::{purge, restart_dim, thick_restart};
pub use ritz::{check_convergence, extract_ritz, RitzSet};
pub use solver::{
    solve, triplet_residual, ConvergedTriplet, DeflationEvent, OuterStep, RunReport, Termination,
};
pub use subspace::{ExpansionVector, SubspacePair};
