//! Cross-evaluation of operator and user solutions: schedule deviation and
//! operating time of each solution under the other model's objective,
//! model-size statistics, and table, CSV and JSON emitters.

mod polish;
mod refine;
mod table;

pub use polish::polish_schedule;
pub use refine::least_deviation_optimum;
pub use table::{format_with_reduction, render_cross_table, render_stats_table};

use crate::formulation::ModelSpec;
use crate::ingestion::RawTripRecord;
use crate::instance::{Direction, Instance, ModelKind, Period};
use crate::mip::{SolveResult, SolveStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const LATE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("trip {0}: actual time missing")]
    MissingActuals(String),
    #[error("{0} solution carries no schedule")]
    ScheduleMissing(&'static str),
    #[error("schedule polishing failed: {0}")]
    Polish(String),
    #[error("CSV output: {0}")]
    Csv(String),
}

/// Total absolute deviation of the recorded operations from the schedule over
/// the nodes of `H`: dropoffs of inbound trips and pickups of outbound trips.
pub fn evaluate_um_raw(trips: &[RawTripRecord]) -> Result<f64, ReportError> {
    let mut total = 0.0;
    for r in trips {
        let id = || r.id.clone().unwrap_or_else(|| "<no id>".into());
        let (actual, scheduled) = match r.direction {
            Some(Direction::Inbound) => (r.actual_dropoff, r.scheduled_dropoff),
            Some(Direction::Outbound) => (r.actual_pickup, r.scheduled_pickup),
            None => return Err(ReportError::MissingActuals(id())),
        };
        match (actual, scheduled) {
            (Some(a), Some(s)) => total += (a - s).abs() as f64,
            _ => return Err(ReportError::MissingActuals(id())),
        }
    }
    Ok(total)
}

/// `Σ_{i∈H} |B_i − s_i|` of a solution.
pub fn schedule_deviation(inst: &Instance, res: &SolveResult) -> Option<f64> {
    let mut total = 0.0;
    for i in inst.h_nodes() {
        let b = res.arrival_times.get(i).copied().flatten()?;
        total += (b - inst.nodes[i].scheduled? as f64).abs();
    }
    Some(total)
}

/// Nodes of `H` reached more than `T` minutes after their scheduled time.
pub fn late_nodes(inst: &Instance, res: &SolveResult) -> Vec<usize> {
    inst.h_nodes()
        .into_iter()
        .filter(|&i| match (res.arrival_times.get(i).copied().flatten(), inst.nodes[i].scheduled) {
            (Some(b), Some(s)) => b - s as f64 > inst.lateness_threshold as f64 + LATE_TOL,
            _ => false,
        })
        .collect()
}

/// The user-model objective at a solution, penalty included:
/// `max(β · #late, |Σ_{i∈H} (B_i − s_i)|)`.
pub fn user_objective(inst: &Instance, res: &SolveResult) -> Option<f64> {
    let mut signed = 0.0;
    for i in inst.h_nodes() {
        signed += res.arrival_times.get(i).copied().flatten()? - inst.nodes[i].scheduled? as f64;
    }
    let penalty = inst.beta * late_nodes(inst, res).len() as f64;
    Some(penalty.max(signed.abs()))
}

fn tenths(v: f64) -> f64 {
    let r = (v * 10.0).round() / 10.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One period of the cross-evaluation. Minutes are rounded to tenths so every
/// emitter prints the same numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRow {
    pub period: Option<Period>,
    pub label: String,
    pub orders: usize,
    pub um_raw: Option<f64>,
    /// `Σ|B − s|` at the user-model solution.
    pub um_um: Option<f64>,
    /// `Σ|B − s|` at the operator-model solution, penalty-free.
    pub um_om: Option<f64>,
    /// User-model objective at the operator-model solution, penalty included.
    pub um_om_objective: Option<f64>,
    /// Operating time of the user-model solution.
    pub om_um: Option<f64>,
    pub om_om: Option<f64>,
    pub v_um: Option<usize>,
    pub v_om: Option<usize>,
    pub om_status: SolveStatus,
    pub um_status: SolveStatus,
    /// Relative gap when the solve stopped before proving optimality.
    pub om_gap: Option<f64>,
    pub um_gap: Option<f64>,
}

impl CrossRow {
    /// Attaches the period and its recorded deviation.
    pub fn in_period(mut self, period: Period, um_raw: Option<f64>) -> Self {
        self.period = Some(period);
        self.label = period.label();
        self.um_raw = um_raw.map(tenths);
        self
    }

    /// Both solves proved optimality.
    pub fn is_optimal(&self) -> bool {
        self.om_status == SolveStatus::Optimal && self.um_status == SolveStatus::Optimal
    }
}

fn gap(res: &SolveResult) -> Option<f64> {
    match (res.status, res.objective) {
        (SolveStatus::Optimal, _) => None,
        (_, Some(u)) => Some(((u - res.best_bound) / u.abs().max(1.0)).max(0.0)),
        _ => None,
    }
}

/// Evaluates each solution under both objectives.
pub fn cross_evaluate(
    inst_om: &Instance,
    res_om: &SolveResult,
    inst_um: &Instance,
    res_um: &SolveResult,
) -> Result<CrossRow, ReportError> {
    if res_om.routes.is_empty() || res_om.depot_times.is_empty() {
        return Err(ReportError::ScheduleMissing("operator-model"));
    }
    if res_um.routes.is_empty() || res_um.depot_times.is_empty() {
        return Err(ReportError::ScheduleMissing("user-model"));
    }
    let um_om = schedule_deviation(inst_om, res_om).ok_or(ReportError::ScheduleMissing("operator-model"))?;
    let um_um = schedule_deviation(inst_um, res_um).ok_or(ReportError::ScheduleMissing("user-model"))?;
    Ok(CrossRow {
        period: None,
        label: String::new(),
        orders: inst_om.n,
        um_raw: None,
        um_um: Some(tenths(um_um)),
        um_om: Some(tenths(um_om)),
        um_om_objective: user_objective(inst_um, res_om).map(tenths),
        om_um: res_um.operating_time().map(tenths),
        om_om: res_om.operating_time().map(tenths),
        v_um: Some(res_um.vehicles_used()),
        v_om: Some(res_om.vehicles_used()),
        om_status: res_om.status,
        um_status: res_um.status,
        om_gap: gap(res_om),
        um_gap: gap(res_um),
    })
}

/// A row for a period where at least one solve produced no schedule.
pub fn unsolved_row(orders: usize, res_om: &SolveResult, res_um: &SolveResult) -> CrossRow {
    let has = |r: &SolveResult| !r.routes.is_empty();
    CrossRow {
        period: None,
        label: String::new(),
        orders,
        um_raw: None,
        um_um: None,
        um_om: None,
        um_om_objective: None,
        om_um: None,
        om_om: if has(res_om) { res_om.operating_time().map(tenths) } else { None },
        v_um: has(res_um).then(|| res_um.vehicles_used()),
        v_om: has(res_om).then(|| res_om.vehicles_used()),
        om_status: res_om.status,
        um_status: res_um.status,
        om_gap: gap(res_om),
        um_gap: gap(res_um),
    }
}

/// Column sums over the period rows. A column with any missing entry sums
/// the entries present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossTotals {
    pub orders: usize,
    pub um_raw: f64,
    pub um_um: f64,
    pub um_om: f64,
    pub um_om_objective: f64,
    pub om_um: f64,
    pub om_om: f64,
    pub v_um: usize,
    pub v_om: usize,
    /// Periods where a solve stopped short of optimality or found nothing.
    pub flagged_periods: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossEvaluation {
    pub rows: Vec<CrossRow>,
    pub totals: CrossTotals,
}

impl CrossEvaluation {
    pub fn new(rows: Vec<CrossRow>) -> Self {
        let mut t = CrossTotals::default();
        let sum = |f: fn(&CrossRow) -> Option<f64>| tenths(rows.iter().filter_map(f).sum());
        t.orders = rows.iter().map(|r| r.orders).sum();
        t.um_raw = sum(|r| r.um_raw);
        t.um_um = sum(|r| r.um_um);
        t.um_om = sum(|r| r.um_om);
        t.um_om_objective = sum(|r| r.um_om_objective);
        t.om_um = sum(|r| r.om_um);
        t.om_om = sum(|r| r.om_om);
        t.v_um = rows.iter().filter_map(|r| r.v_um).sum();
        t.v_om = rows.iter().filter_map(|r| r.v_om).sum();
        t.flagged_periods = rows.iter().filter(|r| !r.is_optimal()).count();
        CrossEvaluation { rows, totals: t }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per period plus a `Total` line; empty cells for missing values.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| ReportError::Csv(e.to_string());
        w.write_record([
            "period",
            "orders",
            "um_raw",
            "um_um",
            "um_om",
            "um_om_objective",
            "om_um",
            "om_om",
            "v_um",
            "v_om",
            "om_status",
            "um_status",
            "om_gap",
            "um_gap",
        ])
        .map_err(err)?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.orders.to_string(),
                f(r.um_raw),
                f(r.um_um),
                f(r.um_om),
                f(r.um_om_objective),
                f(r.om_um),
                f(r.om_om),
                u(r.v_um),
                u(r.v_om),
                r.om_status.to_string(),
                r.um_status.to_string(),
                f(r.om_gap),
                f(r.um_gap),
            ])
            .map_err(err)?;
        }
        let t = &self.totals;
        w.write_record([
            "Total".to_string(),
            t.orders.to_string(),
            t.um_raw.to_string(),
            t.um_um.to_string(),
            t.um_om.to_string(),
            t.um_om_objective.to_string(),
            t.om_um.to_string(),
            t.om_om.to_string(),
            t.v_um.to_string(),
            t.v_om.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .map_err(err)?;
        let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}

/// Model size and solve time of one period model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStatsRow {
    pub model_kind: ModelKind,
    pub vars: usize,
    pub int_vars: usize,
    pub constrs: usize,
    /// Wall-clock seconds.
    pub cpu: f64,
    pub status: SolveStatus,
    pub node_count: u64,
}

pub fn report_model_stats(model: &ModelSpec, solve: &SolveResult) -> ModelStatsRow {
    let s = model.stats();
    ModelStatsRow {
        model_kind: solve.model_kind,
        vars: s.vars,
        int_vars: s.int_vars,
        constrs: s.constrs,
        cpu: solve.wall_time,
        status: solve.status,
        node_count: solve.node_count,
    }
}

#[cfg(test)]
mod tests;
