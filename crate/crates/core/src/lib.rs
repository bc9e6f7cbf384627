//! Local computation of Lovász Local Lemma solutions.
//!
//! A constraint satisfaction problem over a product measure, the resampling
//! algorithm with a stack of violated constraints, a query-by-query local
//! computation algorithm on top of it, and the witness-tree machinery used
//! to check its error bounds.

pub mod apps;
pub mod csp;
pub mod harness;
pub mod lca;
pub mod lll;
pub mod mt;
pub mod rng;
pub mod stats;
pub mod witness;

pub use csp::{Assignment, Constraint, CspError, DependencyMode, Instance, ProductMeasure, SubProblem, Value};
pub use lll::{LllError, Params, Psi};
