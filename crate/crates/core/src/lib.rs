//! Conic relaxations of quadratically constrained quadratic programs:
//! full and sparsity-exploiting SDP/SOCP relaxations, an interior-point
//! solver, matrix completion, and dual recovery.

pub mod completion;
pub mod dual_recovery;
pub mod error;
pub mod export;
pub mod generators;
pub mod graph;
pub mod model;
pub mod pipeline;
pub mod relax;
pub mod solver;
pub mod sparse;
pub mod standard;

pub use error::{Error, Result};
pub use model::{aggregate_pattern, homogenize, AggregatePattern, HomogenizedData, QcqpInstance, QuadForm};
pub use relax::{ConeBlock, ConicProgram, RelaxationKind};
pub use solver::{residuals, solve, Solution, SolverConfig, Status};
pub use sparse::{CsrMatrix, SparseSymMatrix};
pub use standard::{to_standard_form, Form, StandardForm};
