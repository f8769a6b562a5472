//! Homotopy continuation for constrained multiobjective problems, with
//! scalarization and evolutionary baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod homotopy;
pub mod nlp;
pub mod nsga2;
pub mod problem;
pub mod registry;
pub mod report;
pub mod sampling;
pub mod scalarization;
pub mod tracker;

pub use problem::{EvalCounters, Matrix, ProblemDefinition, ProblemError, Vector};
pub use registry::get_problem;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/homotopy.md")]
    mod homotopy {}
    #[doc = include_str!("../../../book/src/scalarization.md")]
    mod scalarization {}
    #[doc = include_str!("../../../book/src/nsga2.md")]
    mod nsga2 {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
