//! Generic in-house optimization kernels: a dense two-phase simplex solver
//! for linear programs and a log-barrier interior-point solver for smooth
//! convex programs with inequality constraints.

mod barrier;
mod simplex;

pub use barrier::{
    barrier_solve, LinearFn, SmoothConvexProgram, SmoothFn, BARRIER_ARMIJO, BARRIER_GAP_TOL,
    BARRIER_KKT_TOL, BARRIER_SHRINK,
};
pub use simplex::{simplex_solve, LinearProgram, SIMPLEX_COST_TOL, SIMPLEX_FEAS_TOL};

/// Terminal state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solve metadata returned alongside every solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStatus {
    pub outcome: Outcome,
    pub iterations: usize,
    /// Final KKT residual (barrier) or worst feasibility/reduced-cost
    /// violation (simplex).
    pub residual: f64,
}
