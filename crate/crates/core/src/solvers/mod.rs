//! Optimization engines for every portfolio model: a dense simplex for LPs,
//! projected gradient for minimum variance, branch-and-bound for the HF/HE
//! mixed-integer program, and multi-start pairwise-exchange local search
//! for the nonconvex HF/HE and prospect-theory problems.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::objectives::PortfolioWeights;

pub mod lp;
pub mod mad;
pub mod milp;
pub mod min_variance;
pub mod multistart;

pub use lp::{solve_lp, solve_lp_from, LpProblem, LpSolution, LpStatus};
pub use mad::{
    build_mean_mad_dual_lp, build_mean_mad_lp, build_min_mad_lp, solve_mean_mad, solve_min_mad,
};
pub use milp::{
    build_hfhe_milp, choose_big_m, milp_point_from_weights, solve_hfhe_milp, solve_milp,
    MilpOptions, MilpProblem,
};
pub use min_variance::{project_to_simplex, solve_min_variance};
pub use multistart::{
    default_starts, multistart, multistart_with, start_points, HfheModel, LocalModel,
    MultistartOptions, PointModel, PtModel, ReturnsModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// Outcome of a portfolio solve. `objective` is in the solver's native
/// sense: minimized for LP, QP and MILP, maximized for multistart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub weights: PortfolioWeights,
    pub objective: f64,
    /// Branch-and-bound nodes processed (MILP only).
    pub nodes: usize,
    /// Local searches run (multistart only).
    pub starts: usize,
    /// Simplex pivots or gradient steps.
    pub iterations: usize,
    pub elapsed: Duration,
}
