//! Controllability-preserving sparse input matrices.
//!
//! Given a real state matrix `A`, this crate decides which sparsity patterns
//! of an input matrix `B` can make `(A, B)` controllable, builds real input
//! matrices for such patterns deterministically, and approximates the
//! sparsest actuator and input-link selections with greedy and coloring
//! based algorithms. Brute-force oracles certify the approximations on small
//! instances.

pub mod bench;
pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod lyapunov;
pub mod macp;
pub mod matroid;
pub mod mscp;
pub mod oracle;
pub mod pattern;
pub mod realization;
pub mod spectral;

pub use error::{Error, Result};
pub use feasibility::{is_controllable, micp_feasible, pattern_feasible, AccessibleSet};
pub use matroid::{independently_matched, matroid_intersection, IndependentMatchWitness};
pub use pattern::{SparsityPattern, IsmDigraph};
pub use spectral::{compute_eigenstructure, EigenStructure, StateMatrix, ToleranceConfig};
