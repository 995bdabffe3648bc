//! Exact dial-a-ride scheduling for demand-responsive paratransit.
//!
//! The crate builds the operator model (minimize vehicle operating time) and
//! the user model (minimize schedule deviation with a lateness penalty) as
//! solver-agnostic MIPs, solves them with a built-in branch-and-bound on a
//! bounded revised simplex, and cross-evaluates the two on trip logs.

pub mod formulation;
pub mod geo;
pub mod ingestion;
pub mod instance;
pub mod mip;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod synthetic;
pub mod time;

pub use formulation::{build_model, build_operator_model, build_user_model, BigMSet, DarpModel, ModelSpec};
pub use geo::GeoPoint;
pub use ingestion::{clean, read_records, RawTripRecord, TravelTimeProvider};
pub use instance::{
    build_instance, Direction, Fleet, Instance, InstanceConfig, ModelKind, NodeKind, Period, TripRequest,
};
pub use mip::{check_solution, solve_darp, BranchingRule, SolveResult, SolveStatus, SolverConfig};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use report::{cross_evaluate, evaluate_um_raw, CrossEvaluation, CrossRow};
