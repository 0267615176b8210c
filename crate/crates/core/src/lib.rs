//! Discrete truss sizing as QUBO: symbolic FEM over boolean area-choice
//! variables, polynomial processing down to a QUBO, and a Dinkelbach loop
//! around a sampler.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boolpoly;
mod par;
pub mod pipeline;
pub mod solvers;
pub mod symfem;
pub mod truss;

pub use par::is_parallel;
