//! Desk-scale deterministic solvers: dense simplex, branch and bound,
//! Kelley cutting planes for cone rows, and support-scenario detection.

mod kelley;
mod milp;
mod simplex;
mod support;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::{DeterministicProgram, ProgramError};

pub use kelley::{kelley_trace, solve_soc, KelleyOptions};
pub use milp::{solve_milp, MilpOptions};
pub use simplex::{solve_lp, solve_lp_with_bounds, LpOptions};
pub use support::{find_support_scenarios, lexicographic_optimum, SupportReport};

/// Feasibility tolerance used by the simplex.
pub const FEAS_TOL: f64 = 1e-9;
/// Optimizer change that makes a scenario a support scenario.
pub const SUPPORT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    /// Values of every program variable (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub support_set: Option<Vec<usize>>,
    pub degenerate: Option<bool>,
    /// Row multipliers for pure LPs, signed so that `c − Aᵀy` are the
    /// reduced costs (`y ≤ 0` on `≤` rows, `y ≥ 0` on `≥` rows).
    pub duals: Option<Vec<f64>>,
    pub pivots: u64,
    pub nodes: u64,
    pub cut_rounds: u64,
}

impl SolveResult {
    pub(crate) fn without_solution(status: Status, pivots: u64) -> Self {
        let objective = match status {
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Self {
            status,
            x: Vec::new(),
            objective,
            support_set: None,
            degenerate: None,
            duals: None,
            pivots,
            nodes: 0,
            cut_rounds: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// The original decision vector (first `n_decision` variables).
    pub fn decision<'a>(&'a self, dp: &DeterministicProgram) -> &'a [f64] {
        &self.x[..dp.n_decision.min(self.x.len())]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("cone relaxation is unbounded; add finite bounds to the variables in the cone rows")]
    UnboundedRelaxation,
    #[error("base solve is not optimal ({0:?})")]
    NotOptimal(Status),
    #[error("scenario problem: {0}")]
    Scenario(String),
}

/// Picks the backend from the program's structure.
pub fn solve(dp: &DeterministicProgram) -> Result<SolveResult, SolverError> {
    match (dp.has_binaries(), dp.has_cones()) {
        (false, false) => solve_lp(dp, &LpOptions::default()),
        (true, false) => solve_milp(dp, &MilpOptions::default()),
        (false, true) => solve_soc(dp, &KelleyOptions::default()),
        (true, true) => Err(SolverError::Unsupported(
            "programs with both binaries and cone rows are not supported",
        )),
    }
}
