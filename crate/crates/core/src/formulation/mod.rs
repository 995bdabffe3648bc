//! Translation of instances into solver-agnostic MIP models, plus MPS and
//! LP-text serialization.

mod bigm;
mod darp;
pub mod lp_text;
pub mod mps;
mod spec;

pub use bigm::{compute_big_m, BigMSet};
pub use darp::{build_model, build_operator_model, build_user_model, DarpModel, VarLayout};
pub use spec::{Constraint, ModelSpec, ModelStats, ObjSense, Objective, RowSense, VarId, VarKind, Variable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("MPS line {line}: {reason}")]
    MpsParse { line: usize, reason: String },
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
}
