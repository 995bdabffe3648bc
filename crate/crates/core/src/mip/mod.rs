//! Exact MIP solving: a bounded dual simplex for relaxations, LP-based
//! branch-and-bound, DARP solution decoding and an independent feasibility
//! checker.

mod bnb;
mod check;
pub mod lp;
mod propagate;
mod result;

pub use bnb::{solve_mip, solve_mip_with, MipOutcome, SolveHints};
pub use check::{check_solution, Violation, ViolationKind};
pub use lp::{solve_lp, LpSolution, LpStatus};
pub use result::{solve_darp, SolveResult};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MipError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingRule {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelection {
    /// Best bound first, diving into the up-branch after each branching.
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Seconds.
    pub time_limit: f64,
    /// Relative gap `(objective − bound) / max(1, |objective|)`.
    pub gap_tolerance: f64,
    pub integrality_tolerance: f64,
    pub branching_rule: BranchingRule,
    pub node_selection: NodeSelection,
    /// Seconds between progress callbacks.
    pub progress_interval: f64,
    pub node_limit: Option<u64>,
    /// Branch on orbits of interchangeable vehicles when the model provides them.
    pub use_symmetry: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: 3600.0,
            gap_tolerance: 1e-6,
            integrality_tolerance: 1e-6,
            branching_rule: BranchingRule::MostFractional,
            node_selection: NodeSelection::BestBound,
            progress_interval: 5.0,
            node_limit: None,
            use_symmetry: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), MipError> {
        if !(self.time_limit > 0.0) {
            return Err(MipError::InvalidConfig("time limit must be positive".into()));
        }
        if !(self.gap_tolerance > 0.0) || !(self.integrality_tolerance > 0.0) {
            return Err(MipError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.integrality_tolerance >= 0.5 {
            return Err(MipError::InvalidConfig("integrality tolerance must be below 0.5".into()));
        }
        if !(self.progress_interval >= 0.0) {
            return Err(MipError::InvalidConfig("progress interval must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Time or node limit reached with an incumbent.
    Feasible,
    /// Limit reached before any feasible point was found.
    TimeLimitNoSolution,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::TimeLimitNoSolution => "time_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        })
    }
}

/// A progress snapshot of a running solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub node: u64,
    pub incumbent: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub elapsed: Duration,
}

impl Progress {
    pub fn new(node: u64, incumbent: Option<f64>, bound: f64, elapsed: Duration) -> Self {
        let gap = match incumbent {
            Some(u) if bound.is_finite() => ((u - bound) / u.abs().max(1.0)).max(0.0),
            _ => f64::INFINITY,
        };
        Progress { node, incumbent, bound, gap, elapsed }
    }
}

impl std::fmt::Display for Progress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inc = self.incumbent.unwrap_or(f64::INFINITY);
        write!(
            f,
            "node={} incumbent={} bound={} gap={} time={:.3}",
            self.node,
            inc,
            self.bound,
            self.gap,
            self.elapsed.as_secs_f64()
        )
    }
}

#[cfg(test)]
mod tests;
