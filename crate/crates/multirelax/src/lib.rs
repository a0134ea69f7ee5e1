//! Piecewise polyhedral relaxations (PPR), recursive piecewise relaxations
//! (R-PPR), and MILP-based feasible-solution recovery for optimization
//! problems with multilinear terms.
//!
//! The crate is organized as:
//!
//! - [`milp`]: solver-agnostic MILP model, feasibility checking
//! - [`lp_format`]: LP-file export and a minimal reader
//! - [`domain`]: multilinear terms, discretizations, grids, grouping trees
//! - [`relax`]: McCormick, convex-hull, PPR, and R-PPR builders
//! - [`recovery`]: edge-restricted recovery MILPs and gap formulas
//! - [`solver`]: internal simplex + branch-and-bound, external adapter
//! - [`problem`]: instance schema, bundled instance, bound randomization
//! - [`pipeline`]: problem-level relaxation assembly
//! - [`harness`]: end-to-end pipelines, benchmark sweeps, CSV emission

pub mod domain;
pub mod harness;
pub mod lp_format;
pub mod milp;
pub mod pipeline;
pub mod problem;
pub mod recovery;
pub mod relax;
pub mod solver;
