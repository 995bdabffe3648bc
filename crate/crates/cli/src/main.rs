mod args;

use anyhow::{bail, Context, Result};
use args::{Cli, Command, IngestArgs, InputArgs, MatrixArgs, OutputFormat, ReportArgs, ReportFormat, SolveArgs};
use clap::Parser;
use paradarp::formulation::{lp_text::to_lp_string, mps::export_mps};
use paradarp::ingestion::{resolve_travel_times, ColumnMapping, HttpProvider, TravelCache};
use paradarp::instance::node_locations;
use paradarp::oracle::{enumerate_optimal, OracleError};
use paradarp::pipeline::{build_period_instances, run_pipeline, solve_many, split_periods, PeriodTrips, SolvedModel};
use paradarp::report::{render_cross_table, render_stats_table, schedule_deviation, ModelStatsRow};
use paradarp::{
    build_model, read_records, Fleet, Instance, ModelKind, RawTripRecord, SolveResult, SolveStatus, TravelTimeProvider,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

/// Bad files, flags or data; exits with code 4.
#[derive(Debug, Error)]
#[error(transparent)]
struct InputError(anyhow::Error);

fn input_err(e: impl Into<anyhow::Error>) -> anyhow::Error {
    InputError(e.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(4);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Solve(a) => solve(a),
        Command::Report(a) => report(a),
        Command::Matrix(a) => matrix(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(4)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_records(input: &InputArgs) -> Result<Vec<RawTripRecord>> {
    let mapping = match &input.mapping {
        Some(p) => ColumnMapping::from_json_file(p).map_err(input_err)?,
        None => ColumnMapping::default(),
    };
    read_records(&input.input, &mapping)
        .with_context(|| format!("reading {}", input.input.display()))
        .map_err(input_err)
}

fn period_stem(trips: &PeriodTrips, kind: ModelKind) -> String {
    let clock = paradarp::time::format_clock(trips.period.start).replace(':', "");
    format!("{clock}_{}", kind_tag(kind))
}

fn kind_tag(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Operator => "om",
        ModelKind::User => "um",
    }
}

/// Instances of the requested kinds for every period of a trip log.
fn instances_from_log(
    input: &InputArgs,
    cfg: &paradarp::PipelineConfig,
    provider: &args::ProviderArgs,
    kinds: &[ModelKind],
) -> Result<(paradarp::ingestion::CleaningReport, Vec<(String, Option<String>, Instance)>)> {
    let records = load_records(input)?;
    let (cleaning, periods) = split_periods(records, cfg).map_err(input_err)?;
    let mut tt = provider.kind().open().context("opening travel-time provider")?;
    let mut out = Vec::new();
    for trips in periods {
        let built = build_period_instances(trips, cfg, tt.as_mut()).map_err(input_err)?;
        for &kind in kinds {
            let inst = match kind {
                ModelKind::Operator => built.operator.clone(),
                ModelKind::User => built.user.clone(),
            };
            out.push((period_stem(&built.trips, kind), Some(built.trips.period.to_string()), inst));
        }
    }
    Ok((cleaning, out))
}

fn ingest(a: IngestArgs) -> Result<ExitCode> {
    let cfg = args::pipeline_config(&a.input, &a.fleet, None);
    let (cleaning, instances) = instances_from_log(&a.input, &cfg, &a.provider, a.model.kinds())?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut files = Vec::new();
    for (stem, _, inst) in &instances {
        let path = a.out_dir.join(format!("{stem}.json"));
        std::fs::write(&path, inst.to_json()).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        cleaning: &'a paradarp::ingestion::CleaningReport,
        instances: Vec<PathBuf>,
    }
    println!("{}", serde_json::to_string_pretty(&Summary { cleaning: &cleaning, instances: files })?);
    Ok(ExitCode::SUCCESS)
}

/// `path` for a single model, `path` with the model's stem spliced in otherwise.
fn output_path(path: &Path, stem: &str, many: bool) -> PathBuf {
    if !many {
        return path.to_path_buf();
    }
    let base = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{base}_{stem}.{}", ext.to_string_lossy()),
        None => format!("{base}_{stem}"),
    };
    path.with_file_name(name)
}

#[derive(Debug, Serialize)]
struct OracleCheck {
    objective: Option<f64>,
    agrees: bool,
}

#[derive(Debug, Serialize)]
struct SolveRecord {
    name: String,
    period: Option<String>,
    orders: usize,
    model: ModelKind,
    status: SolveStatus,
    objective: Option<f64>,
    best_bound: f64,
    gap: Option<f64>,
    vehicles_used: usize,
    operating_time: Option<f64>,
    deviation: Option<f64>,
    stats: ModelStatsRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
    schedule: SolveResult,
}

fn relative_gap(res: &SolveResult) -> Option<f64> {
    let obj = res.objective?;
    res.best_bound.is_finite().then(|| ((obj - res.best_bound) / obj.abs().max(1.0)).max(0.0))
}

fn oracle_check(inst: &Instance, res: &SolveResult) -> Result<Option<OracleCheck>> {
    let check = match enumerate_optimal(inst) {
        Ok(sol) => OracleCheck {
            objective: Some(sol.objective),
            agrees: res.status == SolveStatus::Optimal
                && res.objective.is_some_and(|o| (o - sol.objective).abs() <= 1e-6 * (1.0 + sol.objective.abs())),
        },
        Err(OracleError::Infeasible) => OracleCheck { objective: None, agrees: res.status == SolveStatus::Infeasible },
        Err(e @ OracleError::TooLarge { .. }) => {
            log::warn!("oracle skipped: {e}");
            return Ok(None);
        }
    };
    Ok(Some(check))
}

fn solve(a: SolveArgs) -> Result<ExitCode> {
    let solver = a.solver.config();
    solver.validate().map_err(input_err)?;
    let tasks: Vec<(String, Option<String>, Instance)> = match (&a.instance, a.input_args()) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(input_err)?;
            let mut inst = Instance::from_json(&text).map_err(input_err)?;
            let kinds = a.model.map(|m| m.kinds()).unwrap_or(&[]);
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match kinds {
                [] => vec![(name, None, inst)],
                [kind] => {
                    inst = inst.with_model_kind(*kind).map_err(input_err)?;
                    vec![(name, None, inst)]
                }
                _ => kinds
                    .iter()
                    .map(|&k| {
                        Ok((format!("{name}_{}", kind_tag(k)), None, inst.with_model_kind(k).map_err(input_err)?))
                    })
                    .collect::<Result<_>>()?,
            }
        }
        (None, Some(input)) => {
            let cfg = args::pipeline_config(&input, &a.fleet, Some(&a.solver));
            let kinds = a.model.unwrap_or(args::ModelArg::Om).kinds();
            instances_from_log(&input, &cfg, &a.provider, kinds)?.1
        }
        (None, None) => bail!(InputError(anyhow::anyhow!("one of --input or --instance is required"))),
    };

    let many = tasks.len() > 1;
    for (stem, _, inst) in &tasks {
        if a.dump_lp.is_none() && a.export_mps.is_none() {
            break;
        }
        let model = build_model(inst)?;
        if let Some(p) = &a.dump_lp {
            let path = output_path(p, stem, many);
            std::fs::write(&path, to_lp_string(&model.spec)).with_context(|| format!("writing {}", path.display()))?;
        }
        if let Some(p) = &a.export_mps {
            export_mps(&model.spec, &output_path(p, stem, many))?;
        }
    }

    let refs: Vec<&Instance> = tasks.iter().map(|t| &t.2).collect();
    let solved = solve_many(&refs, &solver, a.solver.jobs);
    let mut records = Vec::with_capacity(tasks.len());
    for ((name, period, inst), out) in tasks.iter().zip(solved) {
        let SolvedModel { result, polished, stats } = out?;
        let oracle = if a.oracle { oracle_check(inst, &result)? } else { None };
        records.push(SolveRecord {
            name: name.clone(),
            period: period.clone(),
            orders: inst.n,
            model: inst.model_kind,
            status: result.status,
            objective: result.objective,
            best_bound: result.best_bound,
            gap: relative_gap(&result),
            vehicles_used: polished.vehicles_used(),
            operating_time: polished.operating_time(),
            deviation: schedule_deviation(inst, &polished),
            stats,
            oracle,
            schedule: polished,
        });
    }

    match a.output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&records)?),
        OutputFormat::Csv => print!("{}", solve_csv(&records)?),
    }
    if let Some(bad) = records.iter().find(|r| r.oracle.as_ref().is_some_and(|o| !o.agrees)) {
        bail!("{}: solver and enumeration disagree", bad.name);
    }
    Ok(exit_code(records.iter().map(|r| r.status)))
}

fn solve_csv(records: &[SolveRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name",
        "period",
        "orders",
        "model",
        "status",
        "objective",
        "best_bound",
        "gap",
        "vehicles_used",
        "operating_time",
        "deviation",
        "vars",
        "int_vars",
        "constrs",
        "cpu",
        "nodes",
        "oracle_objective",
    ])?;
    let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.name.clone(),
            r.period.clone().unwrap_or_default(),
            r.orders.to_string(),
            kind_tag(r.model).to_string(),
            r.status.to_string(),
            f(r.objective),
            r.best_bound.to_string(),
            f(r.gap),
            r.vehicles_used.to_string(),
            f(r.operating_time),
            f(r.deviation),
            r.stats.vars.to_string(),
            r.stats.int_vars.to_string(),
            r.stats.constrs.to_string(),
            format!("{:.3}", r.stats.cpu),
            r.stats.node_count.to_string(),
            f(r.oracle.as_ref().and_then(|o| o.objective)),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// 2 if any model is infeasible, 3 if any stopped at a limit, 0 otherwise.
fn exit_code(statuses: impl IntoIterator<Item = SolveStatus>) -> ExitCode {
    let mut code = 0;
    for s in statuses {
        code = match s {
            SolveStatus::Infeasible | SolveStatus::Unbounded => 2,
            SolveStatus::Feasible | SolveStatus::TimeLimitNoSolution if code == 0 => 3,
            _ => code,
        };
    }
    ExitCode::from(code)
}

fn report(a: ReportArgs) -> Result<ExitCode> {
    let cfg = args::pipeline_config(&a.input, &a.fleet, Some(&a.solver));
    cfg.solver.validate().map_err(input_err)?;
    let records = load_records(&a.input)?;
    let mut tt = a.provider.kind().open().context("opening travel-time provider")?;
    let out = run_pipeline(records, &cfg, tt.as_mut()).map_err(|e| match e {
        paradarp::pipeline::PipelineError::Ingest(_)
        | paradarp::pipeline::PipelineError::Instance { .. }
        | paradarp::pipeline::PipelineError::NoTrips => input_err(e),
        other => other.into(),
    })?;
    match a.format {
        ReportFormat::Table => {
            println!("{}", render_cross_table(&out.evaluation));
            println!("{}", render_stats_table(&out.stats_rows()));
        }
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Full<'a> {
                cleaning: &'a paradarp::ingestion::CleaningReport,
                evaluation: &'a paradarp::CrossEvaluation,
                stats: Vec<(String, usize, ModelStatsRow, ModelStatsRow)>,
            }
            let full = Full { cleaning: &out.cleaning, evaluation: &out.evaluation, stats: out.stats_rows() };
            println!("{}", serde_json::to_string_pretty(&full)?);
        }
        ReportFormat::Csv => print!("{}", out.evaluation.to_csv()?),
    }
    let statuses = out.periods.iter().flat_map(|p| [p.operator.result.status, p.user.result.status]);
    Ok(exit_code(statuses))
}

fn matrix(a: MatrixArgs) -> Result<ExitCode> {
    let records = load_records(&a.input)?;
    let cfg = paradarp::PipelineConfig {
        interval: a.input.interval,
        period: a.input.period,
        depot: a.depot.unwrap_or(paradarp::synthetic::DEPOT),
        ..Default::default()
    };
    let (_, periods) = split_periods(records, &cfg).map_err(input_err)?;
    let cache = TravelCache::open(&a.tt_cache).map_err(input_err)?;
    let before = cache.len();
    let mut http = match &a.endpoint {
        Some(e) => HttpProvider::new(e.clone(), std::env::var(paradarp::ingestion::MATRIX_KEY_ENV).ok(), cache),
        None => HttpProvider::from_env(cache),
    };
    let fleet = Fleet::uniform(1, cfg.capacity, cfg.depot);
    for p in &periods {
        let locations = node_locations(&p.requests, &fleet);
        resolve_travel_times(&locations, &mut http as &mut dyn TravelTimeProvider)
            .with_context(|| format!("period {}", p.period))?;
    }
    #[derive(Serialize)]
    struct Summary {
        periods: usize,
        cached_before: usize,
        cached_after: usize,
        requests_sent: usize,
    }
    let s = Summary {
        periods: periods.len(),
        cached_before: before,
        cached_after: http.cache().len(),
        requests_sent: http.requests_sent(),
    };
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(ExitCode::SUCCESS)
}
