//! End-to-end driver: clean a trip log, bucket it into periods, build both
//! models per period, solve them concurrently and cross-evaluate.

use crate::formulation::{build_model, FormulationError};
use crate::geo::GeoPoint;
use crate::ingestion::{clean, CleaningReport, IngestError, RawTripRecord, TravelTimeProvider};
use crate::instance::{build_instance, Fleet, Instance, InstanceConfig, InstanceError, ModelKind, Period, TripRequest};
use crate::mip::{BranchingRule, MipError, SolveResult, SolverConfig};
use crate::report::{
    cross_evaluate, evaluate_um_raw, least_deviation_optimum, polish_schedule, report_model_stats, unsolved_row,
    CrossEvaluation, ModelStatsRow, ReportError,
};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("period {period}: {source}")]
    Instance { period: Period, source: InstanceError },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("no trips left after cleaning")]
    NoTrips,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Period length in minutes.
    pub interval: i64,
    pub vehicles: usize,
    pub capacity: u32,
    pub depot: GeoPoint,
    /// The model kind is ignored; both models are built.
    pub instance: InstanceConfig,
    pub solver: SolverConfig,
    /// Concurrent solves.
    pub jobs: usize,
    /// Restrict to the period starting at this minute of the day.
    pub period: Option<i64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            interval: 60,
            vehicles: 5,
            capacity: 7,
            depot: crate::synthetic::DEPOT,
            instance: InstanceConfig::default(),
            solver: SolverConfig { branching_rule: BranchingRule::PseudoCost, ..Default::default() },
            jobs: 1,
            period: None,
        }
    }
}

impl PipelineConfig {
    pub fn fleet(&self) -> Fleet {
        Fleet::uniform(self.vehicles, self.capacity, self.depot)
    }
}

/// The clean trips of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodTrips {
    pub period: Period,
    pub records: Vec<RawTripRecord>,
    pub requests: Vec<TripRequest>,
}

/// Cleans `records` and groups them by the period of their scheduled pickup.
pub fn split_periods(
    records: Vec<RawTripRecord>,
    cfg: &PipelineConfig,
) -> Result<(CleaningReport, Vec<PeriodTrips>), PipelineError> {
    let (kept, report) = clean(records);
    let mut buckets: BTreeMap<Period, PeriodTrips> = BTreeMap::new();
    for r in kept {
        let req = r.to_trip_request(cfg.interval)?;
        let entry = buckets.entry(req.period).or_insert_with(|| PeriodTrips {
            period: req.period,
            records: Vec::new(),
            requests: Vec::new(),
        });
        entry.records.push(r);
        entry.requests.push(req);
    }
    let periods: Vec<PeriodTrips> =
        buckets.into_values().filter(|p| cfg.period.is_none_or(|start| p.period.start == start)).collect();
    if periods.is_empty() {
        return Err(PipelineError::NoTrips);
    }
    Ok((report, periods))
}

/// One period's instances of both models.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodInstances {
    pub trips: PeriodTrips,
    pub operator: Instance,
    pub user: Instance,
}

pub fn build_period_instances(
    trips: PeriodTrips,
    cfg: &PipelineConfig,
    provider: &mut dyn TravelTimeProvider,
) -> Result<PeriodInstances, PipelineError> {
    let period = trips.period;
    let wrap = |source| PipelineError::Instance { period, source };
    let config = InstanceConfig { model_kind: ModelKind::Operator, ..cfg.instance.clone() };
    let operator = build_instance(&trips.requests, &cfg.fleet(), &config, provider).map_err(wrap)?;
    let user = operator.with_model_kind(ModelKind::User).map_err(wrap)?;
    Ok(PeriodInstances { trips, operator, user })
}

/// A solved model: the solver result, the reported schedule and size statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedModel {
    pub result: SolveResult,
    /// The reported schedule.
    pub polished: SolveResult,
    pub stats: ModelStatsRow,
}

/// Solves `inst` and re-times the schedule. For the user model the reported
/// schedule is a least-deviation optimum. Statistics describe the first solve.
pub fn solve_instance(inst: &Instance, solver: &SolverConfig) -> Result<SolvedModel, PipelineError> {
    let model = build_model(inst)?;
    let result = crate::mip::solve_darp(&model, solver, None)?;
    let stats = report_model_stats(&model.spec, &result);
    let mut polished = polish_schedule(inst, &result)?;
    if inst.model_kind == ModelKind::User {
        let best = least_deviation_optimum(inst, &model, &result, &polished, solver)?;
        polished = polish_schedule(inst, &best)?;
    }
    Ok(SolvedModel { result, polished, stats })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    pub instances: PeriodInstances,
    pub operator: SolvedModel,
    pub user: SolvedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub cleaning: CleaningReport,
    pub periods: Vec<PeriodOutcome>,
    pub evaluation: CrossEvaluation,
}

impl PipelineOutput {
    /// Rows for [`crate::report::render_stats_table`].
    pub fn stats_rows(&self) -> Vec<(String, usize, ModelStatsRow, ModelStatsRow)> {
        self.periods
            .iter()
            .map(|p| {
                let i = &p.instances;
                (i.trips.period.label(), i.operator.n, p.operator.stats.clone(), p.user.stats.clone())
            })
            .collect()
    }
}

/// Solves each instance on up to `jobs` threads. Results come back in input
/// order whatever the interleaving.
pub fn solve_many(tasks: &[&Instance], solver: &SolverConfig, jobs: usize) -> Vec<Result<SolvedModel, PipelineError>> {
    let slots: Vec<Mutex<Option<Result<SolvedModel, PipelineError>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, tasks.len().max(1)) {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                let Some(inst) = tasks.get(t) else { break };
                let out = solve_instance(inst, solver);
                if let Ok(m) = &out {
                    log::info!(
                        "{:?} model, {} orders: {} in {:.2}s, {} nodes",
                        inst.model_kind,
                        inst.n,
                        m.result.status,
                        m.result.wall_time,
                        m.result.node_count
                    );
                }
                *slots[t].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every task ran")).collect()
}

/// Solves both models of every period.
pub fn solve_periods(
    periods: Vec<PeriodInstances>,
    solver: &SolverConfig,
    jobs: usize,
) -> Result<Vec<PeriodOutcome>, PipelineError> {
    let tasks: Vec<&Instance> = periods.iter().flat_map(|p| [&p.operator, &p.user]).collect();
    let mut solved = solve_many(&tasks, solver, jobs).into_iter();
    let mut out = Vec::with_capacity(periods.len());
    for instances in periods {
        let operator = solved.next().expect("operator result")?;
        let user = solved.next().expect("user result")?;
        out.push(PeriodOutcome { instances, operator, user });
    }
    Ok(out)
}

/// Cross-evaluation rows, one per period, in period order.
pub fn evaluate_periods(periods: &[PeriodOutcome]) -> Result<CrossEvaluation, PipelineError> {
    let mut rows = Vec::with_capacity(periods.len());
    for p in periods {
        let i = &p.instances;
        let (om, um) = (&p.operator.polished, &p.user.polished);
        let row = if om.status.has_solution() && um.status.has_solution() {
            cross_evaluate(&i.operator, om, &i.user, um)?
        } else {
            unsolved_row(i.operator.n, om, um)
        };
        rows.push(row.in_period(i.trips.period, evaluate_um_raw(&i.trips.records).ok()));
    }
    Ok(CrossEvaluation::new(rows))
}

/// Clean, bucket, build, solve and cross-evaluate a trip log.
pub fn run_pipeline(
    records: Vec<RawTripRecord>,
    cfg: &PipelineConfig,
    provider: &mut dyn TravelTimeProvider,
) -> Result<PipelineOutput, PipelineError> {
    let (cleaning, trips) = split_periods(records, cfg)?;
    let instances =
        trips.into_iter().map(|t| build_period_instances(t, cfg, provider)).collect::<Result<Vec<_>, _>>()?;
    let periods = solve_periods(instances, &cfg.solver, cfg.jobs)?;
    let evaluation = evaluate_periods(&periods)?;
    Ok(PipelineOutput { cleaning, periods, evaluation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::HaversineProvider;
    use crate::synthetic::{synthetic_day, SYNTHETIC_SPEED_KMH};

    fn small_day() -> Vec<RawTripRecord> {
        // The three 1-4 trip periods at the ends of the day.
        synthetic_day(crate::synthetic::FIXTURE_SEED)
            .into_iter()
            .filter(|r| matches!(r.scheduled_pickup.map(|m| m / 60), Some(5 | 6 | 15)))
            .collect()
    }

    #[test]
    fn split_groups_by_pickup_hour() {
        let (report, periods) = split_periods(small_day(), &PipelineConfig::default()).unwrap();
        assert_eq!(report.kept, 7);
        assert_eq!(periods.iter().map(|p| p.requests.len()).collect::<Vec<_>>(), vec![1, 4, 2]);
        for p in &periods {
            assert!(p.requests.iter().all(|r| r.period == p.period));
            assert_eq!(p.records.len(), p.requests.len());
        }
    }

    #[test]
    fn period_filter_keeps_one_period() {
        let cfg = PipelineConfig { period: Some(15 * 60), ..Default::default() };
        let (_, periods) = split_periods(small_day(), &cfg).unwrap();
        assert_eq!(periods.len(), 1);
        assert_eq!(periods[0].period.start, 900);
        let cfg = PipelineConfig { period: Some(3 * 60), ..Default::default() };
        assert!(matches!(split_periods(small_day(), &cfg), Err(PipelineError::NoTrips)));
    }

    #[test]
    fn pipeline_on_small_periods() {
        let mut provider = HaversineProvider { speed_kmh: SYNTHETIC_SPEED_KMH };
        let cfg = PipelineConfig { jobs: 2, ..Default::default() };
        let out = run_pipeline(small_day(), &cfg, &mut provider).unwrap();
        assert_eq!(out.evaluation.rows.len(), 3);
        for (row, p) in out.evaluation.rows.iter().zip(&out.periods) {
            assert!(row.is_optimal());
            assert_eq!(row.orders, p.instances.operator.n);
            assert!(row.um_um.unwrap() <= row.um_raw.unwrap());
            assert!(row.v_om.unwrap() <= cfg.vehicles && row.v_um.unwrap() <= cfg.vehicles);
        }
        assert_eq!(out.stats_rows().len(), 3);

        let serial = run_pipeline(small_day(), &PipelineConfig::default(), &mut provider).unwrap();
        assert_eq!(serial.evaluation.to_json(), out.evaluation.to_json());
    }
}
